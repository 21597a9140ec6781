// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>

namespace py = pybind11;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Ray-traced sparse 2D/3D attention for multi-object reconstruction";
    m.attr("__version__") = RAYGRID_VERSION;
}
