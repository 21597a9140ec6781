// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "raygrid/trainer/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

namespace raygrid::trainer {

namespace {

constexpr char kMagic[4] = {'R', 'G', 'C', 'K'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    detail::check(static_cast<bool>(in), "checkpoint: truncated");
    return value;
}

void write_tensor_data(std::ostream& out, const nn::Tensor<double>& t) {
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
}

void read_tensor_data(std::istream& in, nn::Tensor<double>& t) {
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    detail::check(static_cast<bool>(in), "checkpoint: truncated");
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const nn::ParamStore<double>& params, int64_t step,
                     uint64_t config_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kMagic, 4);
    write_pod(out, kVersion);
    write_pod(out, config_hash);
    write_pod(out, params.seed());
    write_pod(out, step);
    write_pod<uint64_t>(out, params.entries().size());
    for (const auto& [name, entry] : params.entries()) {
        write_pod<uint32_t>(out, static_cast<uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<uint32_t>(out, static_cast<uint32_t>(entry.value.shape.size()));
        for (const int64_t d : entry.value.shape) write_pod(out, d);
        write_tensor_data(out, entry.value);
        write_tensor_data(out, entry.m);
        write_tensor_data(out, entry.v);
    }
    if (!out) throw IoError("failed writing " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    char magic[4];
    in.read(magic, 4);
    detail::check(static_cast<bool>(in) && std::equal(magic, magic + 4, kMagic),
                  "checkpoint: bad magic");
    detail::check(read_pod<uint32_t>(in) == kVersion,
                  "checkpoint: unsupported version");
    const uint64_t config_hash = read_pod<uint64_t>(in);
    const uint64_t seed = read_pod<uint64_t>(in);
    const int64_t step = read_pod<int64_t>(in);
    const uint64_t n_params = read_pod<uint64_t>(in);

    LoadedCheckpoint loaded{nn::ParamStore<double>(seed), step, config_hash};
    for (uint64_t p = 0; p < n_params; ++p) {
        const uint32_t name_len = read_pod<uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        detail::check(static_cast<bool>(in), "checkpoint: truncated");
        const uint32_t rank = read_pod<uint32_t>(in);
        std::vector<int64_t> shape(rank);
        for (uint32_t i = 0; i < rank; ++i) shape[i] = read_pod<int64_t>(in);

        nn::ParamEntry<double> entry;
        entry.value = nn::Tensor<double>(shape);
        entry.grad = nn::Tensor<double>(shape);
        entry.m = nn::Tensor<double>(shape);
        entry.v = nn::Tensor<double>(shape);
        read_tensor_data(in, entry.value);
        read_tensor_data(in, entry.m);
        read_tensor_data(in, entry.v);
        const bool inserted =
            loaded.params.entries().emplace(name, std::move(entry)).second;
        detail::check(inserted, "checkpoint: duplicate parameter " + name);
    }
    return loaded;
}

}  // namespace raygrid::trainer
