#include "tailcal/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tailcal/error.hpp"

namespace tailcal {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') throw Error(ErrorKind::data, "bad numeric field: " + s);
    return v;
}

std::vector<std::string> read_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

}  // namespace

std::string curve_to_csv(const CalibrationCurve& curve) {
    std::string out = "delta,expected_count,observed_count,ratio,log10_ratio\n";
    for (const CurvePoint& p : curve.points) {
        out += format_double(p.delta);
        out += ',';
        out += format_double(p.expected_count);
        out += ',';
        out += std::to_string(p.observed_count);
        out += ',';
        out += format_double(p.ratio);
        out += ',';
        out += format_double(p.log10_ratio);
        out += '\n';
    }
    return out;
}

CalibrationCurve curve_from_csv(const std::string& text) {
    const std::vector<std::string> lines = read_lines(text);
    if (lines.empty() || lines[0] != "delta,expected_count,observed_count,ratio,log10_ratio") {
        throw Error(ErrorKind::schema, "bad curve CSV header");
    }
    CalibrationCurve curve;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_line(lines[i]);
        if (fields.size() != 5) throw Error(ErrorKind::data, "bad curve CSV row");
        CurvePoint p;
        p.delta = parse_double(fields[0]);
        p.expected_count = parse_double(fields[1]);
        p.observed_count = static_cast<std::size_t>(std::strtoull(fields[2].c_str(), nullptr, 10));
        p.ratio = parse_double(fields[3]);
        p.log10_ratio = parse_double(fields[4]);
        curve.points.push_back(p);
    }
    if (!curve.points.empty()) {
        curve.n_test = static_cast<std::size_t>(
            std::llround(curve.points[0].expected_count / curve.points[0].delta));
    }
    return curve;
}

std::string scaling_to_csv(const std::vector<std::pair<double, double>>& points) {
    std::string out = "n_train,delta_min\n";
    for (const auto& [n, d] : points) {
        out += format_double(n);
        out += ',';
        out += format_double(d);
        out += '\n';
    }
    return out;
}

std::vector<std::pair<double, double>> scaling_from_csv(const std::string& text) {
    const std::vector<std::string> lines = read_lines(text);
    if (lines.empty() || lines[0] != "n_train,delta_min") {
        throw Error(ErrorKind::schema, "bad scaling CSV header");
    }
    std::vector<std::pair<double, double>> points;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_line(lines[i]);
        if (fields.size() != 2) throw Error(ErrorKind::data, "bad scaling CSV row");
        points.emplace_back(parse_double(fields[0]), parse_double(fields[1]));
    }
    return points;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::data, "cannot open for writing: " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw Error(ErrorKind::data, "write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::data, "cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace tailcal
