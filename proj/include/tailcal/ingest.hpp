#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tailcal/config.hpp"
#include "tailcal/trajectory.hpp"

namespace tailcal {

// Column layout for scenario record CSVs (highD-compatible shape: one row
// per frame, grouped by track).
struct IngestSchema {
    std::string track_column = "track_id";
    std::string frame_column = "frame";
    std::string x_column = "x";
    std::string y_column = "y";
    std::vector<std::string> context_columns;
    std::string mode_column;  // empty: no mode labels
    double sample_rate = 25.0;
    double segment_seconds = 10.0;
    double sentinel = 1e9;
};

struct IngestReport {
    Dataset dataset;
    std::vector<std::size_t> malformed_lines;  // 1-based line numbers
    std::size_t partial_segments = 0;
};

// Groups rows by track, orders by frame, and windows each track into
// segment_seconds segments at segment_seconds stride (consecutive segments
// share their boundary sample). Malformed rows are skipped and reported.
IngestReport ingest_scenarios(const std::string& path, const IngestSchema& schema);
IngestReport ingest_scenarios_text(const std::string& text, const std::string& source_name,
                                   const IngestSchema& schema);

// Reads the [ingest] section (columns, sample_rate, sentinel, ...).
IngestSchema schema_from_config(const Config& cfg);

std::string dataset_to_csv(const Dataset& dataset, const IngestSchema& schema);
void write_dataset_csv(const std::string& path, const Dataset& dataset, const IngestSchema& schema);

}  // namespace tailcal
