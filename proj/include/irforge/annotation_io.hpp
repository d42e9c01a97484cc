#pragma once

#include <string>

#include "irforge/annotation.hpp"

namespace irforge {

// On-disk layout of one image's ground truth inside a directory:
//   boxes.txt   one target per line: "x_min y_min x_max y_max"
//   points.csv  header "cx,cy", one row per target, 2 decimal places
//   mask.png    binary target mask (0 / 255)
void write_annotation(const std::string& dir, const Annotation& ann, int compression_level = 4);
Annotation read_annotation(const std::string& dir);

}  // namespace irforge
