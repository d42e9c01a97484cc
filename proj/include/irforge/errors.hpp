#pragma once

#include <stdexcept>
#include <string>

namespace irforge {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid argument values or shape mismatches.
struct ParamError : Error {
    explicit ParamError(const std::string& msg) : Error(msg) {}
};

// Geometry outside the valid raster area.
struct BoundsError : Error {
    explicit BoundsError(const std::string& msg) : Error(msg) {}
};

// File system / serialization failures. Message carries the path.
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// No sky window large enough to host a dense area.
struct SkyTooSmallError : Error {
    explicit SkyTooSmallError(const std::string& msg) : Error(msg) {}
};

// Could not pack the requested minimum number of targets into a region.
struct ClusterPackingError : Error {
    explicit ClusterPackingError(const std::string& msg) : Error(msg) {}
};

}  // namespace irforge
