#pragma once

#include <string>
#include <vector>

#include "softrl/geometry.hpp"

namespace softrl::svg {

/// X-Y plane overlay of a target trajectory (dashed) and an achieved path
/// (solid), with axes and a fixed viewBox.
std::string xy_overlay(const std::vector<geometry::Point3>& target,
                       const std::vector<geometry::Point3>& achieved,
                       const std::string& title);

void write_xy_overlay(const std::string& path, const std::vector<geometry::Point3>& target,
                      const std::vector<geometry::Point3>& achieved, const std::string& title);

}  // namespace softrl::svg
