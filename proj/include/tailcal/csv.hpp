#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tailcal/calibration.hpp"

namespace tailcal {

// 17 significant digits: round-trips any double exactly.
std::string format_double(double v);

// Comma-separated, header row, LF endings.
std::string curve_to_csv(const CalibrationCurve& curve);
CalibrationCurve curve_from_csv(const std::string& text);

std::string scaling_to_csv(const std::vector<std::pair<double, double>>& points);
std::vector<std::pair<double, double>> scaling_from_csv(const std::string& text);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace tailcal
