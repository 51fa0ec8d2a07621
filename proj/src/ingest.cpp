#include "tailcal/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "tailcal/csv.hpp"
#include "tailcal/error.hpp"

namespace tailcal {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

bool parse_num(const std::string& s, double& v) {
    const char* begin = s.c_str();
    char* end = nullptr;
    v = std::strtod(begin, &end);
    return end != begin && *end == '\0';
}

struct Row {
    double frame = 0.0;
    Vec2 pos;
    std::vector<double> context;
    double mode = 0.0;
};

}  // namespace

IngestReport ingest_scenarios_text(const std::string& text, const std::string& source_name,
                                   const IngestSchema& schema) {
    if (!(schema.sample_rate > 0.0)) throw Error(ErrorKind::schema, "sample_rate must be positive");
    std::vector<std::string> lines;
    {
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
    }
    if (lines.empty()) throw Error(ErrorKind::schema, "empty file");

    const std::vector<std::string> header = split_fields(lines[0]);
    auto column = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw Error(ErrorKind::schema, "missing column: " + name);
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t track_col = column(schema.track_column);
    const std::size_t frame_col = column(schema.frame_column);
    const std::size_t x_col = column(schema.x_column);
    const std::size_t y_col = column(schema.y_column);
    std::vector<std::size_t> ctx_cols;
    for (const std::string& name : schema.context_columns) ctx_cols.push_back(column(name));
    const bool has_mode = !schema.mode_column.empty();
    const std::size_t mode_col = has_mode ? column(schema.mode_column) : 0;

    IngestReport report;
    std::map<std::string, std::vector<Row>> tracks;
    std::vector<std::string> track_order;  // first-appearance order
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::vector<std::string> fields = split_fields(lines[i]);
        Row row;
        bool ok = fields.size() == header.size() && parse_num(fields[frame_col], row.frame) &&
                  parse_num(fields[x_col], row.pos.x) && parse_num(fields[y_col], row.pos.y);
        if (ok) {
            for (std::size_t c : ctx_cols) {
                double v;
                if (!parse_num(fields[c], v)) {
                    ok = false;
                    break;
                }
                row.context.push_back(v);
            }
        }
        if (ok && has_mode) ok = parse_num(fields[mode_col], row.mode);
        if (!ok) {
            report.malformed_lines.push_back(i + 1);
            continue;
        }
        auto [it, inserted] = tracks.try_emplace(fields[track_col]);
        if (inserted) track_order.push_back(fields[track_col]);
        it->second.push_back(std::move(row));
    }

    const std::size_t seg_len =
        static_cast<std::size_t>(std::llround(schema.segment_seconds * schema.sample_rate)) + 1;
    const std::size_t stride = seg_len - 1;
    std::uint64_t record = 0;
    for (const std::string& key : track_order) {
        std::vector<Row>& rows = tracks[key];
        std::stable_sort(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) { return a.frame < b.frame; });
        const std::size_t m = rows.size();
        const std::size_t full = m >= seg_len ? (m - 1) / stride : 0;
        if (m > full * stride + 1) ++report.partial_segments;
        for (std::size_t s = 0; s < full; ++s) {
            const std::size_t base = s * stride;
            std::vector<Vec2> positions(seg_len);
            for (std::size_t t = 0; t < seg_len; ++t) positions[t] = rows[base + t].pos;
            Scenario sc;
            sc.trajectory = Trajectory(std::move(positions), schema.sample_rate);
            sc.context.features = rows[base].context;
            if (has_mode) sc.mode_label = static_cast<int>(std::llround(rows[base].mode));
            sc.id = {source_name, record++};
            report.dataset.scenarios.push_back(std::move(sc));
        }
    }
    if (report.dataset.scenarios.empty()) {
        throw Error(ErrorKind::data, "no full segments ingested from " + source_name);
    }
    report.dataset.sentinel = schema.sentinel;
    report.dataset.validate();
    return report;
}

IngestReport ingest_scenarios(const std::string& path, const IngestSchema& schema) {
    return ingest_scenarios_text(read_file(path), path, schema);
}

IngestSchema schema_from_config(const Config& cfg) {
    IngestSchema schema;
    schema.track_column = cfg.get_string("ingest.track_column", schema.track_column);
    schema.frame_column = cfg.get_string("ingest.frame_column", schema.frame_column);
    schema.x_column = cfg.get_string("ingest.x_column", schema.x_column);
    schema.y_column = cfg.get_string("ingest.y_column", schema.y_column);
    schema.mode_column = cfg.get_string("ingest.mode_column", "");
    schema.sample_rate = cfg.get_double("ingest.sample_rate", schema.sample_rate);
    schema.segment_seconds = cfg.get_double("ingest.segment_seconds", schema.segment_seconds);
    schema.sentinel = cfg.get_double("ingest.sentinel", schema.sentinel);
    const std::string ctx = cfg.get_string("ingest.context_columns", "");
    std::string item;
    for (std::size_t i = 0; i <= ctx.size(); ++i) {
        if (i == ctx.size() || ctx[i] == ',') {
            while (!item.empty() && item.front() == ' ') item.erase(item.begin());
            while (!item.empty() && item.back() == ' ') item.pop_back();
            if (!item.empty()) schema.context_columns.push_back(item);
            item.clear();
        } else {
            item.push_back(ctx[i]);
        }
    }
    return schema;
}

std::string dataset_to_csv(const Dataset& dataset, const IngestSchema& schema) {
    std::string out = schema.track_column + "," + schema.frame_column + "," + schema.x_column +
                      "," + schema.y_column;
    for (const std::string& c : schema.context_columns) out += "," + c;
    const bool has_mode = !schema.mode_column.empty();
    if (has_mode) out += "," + schema.mode_column;
    out += '\n';
    for (std::size_t i = 0; i < dataset.scenarios.size(); ++i) {
        const Scenario& sc = dataset.scenarios[i];
        if (sc.context.features.size() != schema.context_columns.size()) {
            throw Error(ErrorKind::schema, "context width does not match the schema");
        }
        if (has_mode && !sc.mode_label.has_value()) {
            throw Error(ErrorKind::schema, "schema declares a mode column but a scenario has no label");
        }
        for (std::size_t t = 0; t < sc.trajectory.size(); ++t) {
            out += std::to_string(i);
            out += ',';
            out += std::to_string(t);
            out += ',';
            out += format_double(sc.trajectory.positions()[t].x);
            out += ',';
            out += format_double(sc.trajectory.positions()[t].y);
            for (double v : sc.context.features) {
                out += ',';
                out += format_double(v);
            }
            if (has_mode) {
                out += ',';
                out += std::to_string(*sc.mode_label);
            }
            out += '\n';
        }
    }
    return out;
}

void write_dataset_csv(const std::string& path, const Dataset& dataset, const IngestSchema& schema) {
    write_file(path, dataset_to_csv(dataset, schema));
}

}  // namespace tailcal
