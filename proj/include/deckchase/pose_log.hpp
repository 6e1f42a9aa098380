#pragma once

#include "deckchase/usv_estimator.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace deckchase::usv {

// Pose-log replay format: CSV with header `t,x,y,z,eta`, SI units, one row
// per measurement.
std::vector<PoseMeasurement> read_pose_log(std::istream& in);
std::vector<PoseMeasurement> read_pose_log_file(const std::string& path);
void write_pose_log(std::ostream& out, const std::vector<PoseMeasurement>& poses);

}  // namespace deckchase::usv
