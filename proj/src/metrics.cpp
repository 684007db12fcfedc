#include "dsac/metrics.hpp"

#include <json.hpp>

#include "dsac/errors.hpp"

namespace dsac {

std::string format_double(double value) { return nlohmann::json(value).dump(); }

std::string to_jsonl(const MetricsRecord& record) {
    nlohmann::ordered_json json;
    json["step"] = record.step;
    json["variant"] = record.variant;
    json["seed"] = record.seed;
    json["eval_return_mean"] = record.eval_return_mean;
    json["eval_return_std"] = record.eval_return_std;
    json["entropy"] = record.entropy;
    json["alpha"] = record.alpha;
    json["lambda_mean"] = record.lambda_mean;
    json["ev_mean_gap"] = record.ev_mean_gap;
    json["ev_var_gap"] = record.ev_var_gap;
    json["q_mean"] = record.q_mean;
    return json.dump();
}

std::string metrics_csv_header() {
    return "step,variant,seed,eval_return_mean,eval_return_std,entropy,alpha,lambda_mean,"
           "ev_mean_gap,ev_var_gap,q_mean";
}

std::string to_csv_row(const MetricsRecord& record) {
    std::string row;
    row += std::to_string(record.step);
    row += ',';
    row += record.variant;
    row += ',';
    row += std::to_string(record.seed);
    for (double value : {record.eval_return_mean, record.eval_return_std, record.entropy,
                         record.alpha, record.lambda_mean, record.ev_mean_gap, record.ev_var_gap,
                         record.q_mean}) {
        row += ',';
        row += format_double(value);
    }
    return row;
}

MetricsWriter::MetricsWriter(const std::string& jsonl_path, const std::string& csv_path)
    : jsonl_(jsonl_path, std::ios::trunc), csv_(csv_path, std::ios::trunc) {
    if (!jsonl_) throw UsageError("cannot open metrics file \"" + jsonl_path + "\"");
    if (!csv_) throw UsageError("cannot open metrics file \"" + csv_path + "\"");
    csv_ << metrics_csv_header() << "\n";
}

void MetricsWriter::append(const MetricsRecord& record) {
    jsonl_ << to_jsonl(record) << "\n";
    jsonl_.flush();
    csv_ << to_csv_row(record) << "\n";
    csv_.flush();
}

}  // namespace dsac
