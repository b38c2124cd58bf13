#include <pybind11/pybind11.h>
PYBIND11_MODULE(prtransx, m) { m.doc() = "placeholder"; }
