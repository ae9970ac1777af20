#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "vortexlab/domain.hpp"

namespace vlab {

// Binary layout (native little-endian):
//   char[4] magic "VLF1" (Field) or "VLP1" (Profile)
//   int32 d, int32 n_perp, int32 n3, float64 L, uint64 count
//   float64 values[count], tangential index fastest

void write_field(std::ostream& os, const Field& f);
Field read_field(std::istream& is);
void write_profile(std::ostream& os, const Profile& p);
Profile read_profile(std::istream& is);

void save_field(const std::string& path, const Field& f);
Field load_field(const std::string& path);

/// CSV with header "x3,<name>..." for one or more profiles on the same grid.
void write_profiles_csv(const std::string& path, const std::vector<std::string>& names,
                        const std::vector<const Profile*>& cols);

} // namespace vlab
