#pragma once

#include <cstdint>
#include <fstream>
#include <string>

namespace dsac {

/// One evaluation-point record of the training metrics stream. Field order is
/// part of the format and identical between JSONL and CSV.
struct MetricsRecord {
    std::int64_t step = 0;
    std::string variant;
    std::uint64_t seed = 0;
    double eval_return_mean = 0.0;
    double eval_return_std = 0.0;
    double entropy = 0.0;
    double alpha = 0.0;
    double lambda_mean = 0.0;
    double ev_mean_gap = 0.0;
    double ev_var_gap = 0.0;
    double q_mean = 0.0;
};

/// Shortest round-trip-safe decimal rendering, shared by JSONL and CSV.
std::string format_double(double value);

std::string to_jsonl(const MetricsRecord& record);
std::string metrics_csv_header();
std::string to_csv_row(const MetricsRecord& record);

/// Mirrors every record to a JSONL file and a CSV file with identical column
/// order. Output is byte-deterministic for a deterministic record stream.
class MetricsWriter {
public:
    MetricsWriter(const std::string& jsonl_path, const std::string& csv_path);

    void append(const MetricsRecord& record);

private:
    std::ofstream jsonl_;
    std::ofstream csv_;
};

}  // namespace dsac
