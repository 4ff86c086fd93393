#pragma once

#include <stdexcept>
#include <string>

namespace lal {

// Base class for everything this library throws on bad input or bad data.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/image dimensions do not line up.
struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Argument outside its documented range.
struct ValueError : Error {
    explicit ValueError(const std::string& msg) : Error(msg) {}
};

// A metric that needs a non-empty segmentation was asked about an empty one.
struct NoVesselError : Error {
    explicit NoVesselError(const std::string& msg) : Error(msg) {}
};

// The VDI curve carries no usable curvature signal (untrained/constant model).
struct DegenerateCurveError : Error {
    explicit DegenerateCurveError(const std::string& msg) : Error(msg) {}
};

// File format or filesystem failure.
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

} // namespace lal
