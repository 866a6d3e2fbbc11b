#pragma once

// Columnar text format for grid fields:
//   # horizon <T>
//   # time_steps <M_t>
//   # space_steps <M_y>
//   t y value
//   ...
// Current paths use the same header without space_steps and "t value" rows.

#include <iosfwd>
#include <string>

#include "ssepld/fields.hpp"

namespace ssepld {

void write_density(std::ostream& os, const DensityField& f);
void write_tilt(std::ostream& os, const TiltField& f);
void write_current(std::ostream& os, const CurrentPath& j);

// Parse errors throw std::runtime_error with the offending line number.
DensityField read_density(std::istream& is);
TiltField read_tilt(std::istream& is);
CurrentPath read_current(std::istream& is);

DensityField load_density(const std::string& path);
TiltField load_tilt(const std::string& path);
CurrentPath load_current(const std::string& path);

}  // namespace ssepld
