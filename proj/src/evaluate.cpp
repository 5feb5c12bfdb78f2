#include "discnn/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace discnn::evaluate {

MetricsPair metrics(const ConfusionMatrix& cm) {
    auto ratio = [](long long num, long long denom) -> std::optional<double> {
        if (denom == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(denom);
    };
    auto f1_of = [](const std::optional<double>& p, const std::optional<double>& r) -> std::optional<double> {
        if (!p || !r || *p + *r == 0.0) return std::nullopt;
        return 2.0 * *p * *r / (*p + *r);
    };
    MetricsPair m;
    m.positive.precision = ratio(cm.tp, cm.tp + cm.fp);
    m.positive.recall = ratio(cm.tp, cm.tp + cm.fn);
    m.positive.f1 = f1_of(m.positive.precision, m.positive.recall);
    m.negative.precision = ratio(cm.tn, cm.tn + cm.fn);
    m.negative.recall = ratio(cm.tn, cm.tn + cm.fp);
    m.negative.f1 = f1_of(m.negative.precision, m.negative.recall);
    return m;
}

std::vector<loss::EmbeddingRecord> encode_dataset(models::Model& model,
                                                  const std::vector<data::LabeledImage>& dataset) {
    std::vector<loss::EmbeddingRecord> records;
    records.reserve(dataset.size());
    const std::size_t chunk = 32;
    for (std::size_t begin = 0; begin < dataset.size(); begin += chunk) {
        const std::size_t end = std::min(dataset.size(), begin + chunk);
        const auto& shape = dataset[begin].pixels.shape();
        num::Tensor batch({static_cast<int>(end - begin), shape[0], shape[1], shape[2]});
        const std::size_t sample = dataset[begin].pixels.size();
        for (std::size_t i = begin; i < end; ++i) {
            if (dataset[i].pixels.size() != sample) {
                throw ShapeError("encode_dataset: sample '" + dataset[i].id + "' shape " +
                                 num::shape_str(dataset[i].pixels.shape()) + " differs within the batch");
            }
            std::copy_n(dataset[i].pixels.data(), sample, batch.values.data() + (i - begin) * sample);
        }
        const num::Tensor embeddings = model.forward_embed(batch, num::BnMode::Eval);
        const int width = embeddings.dim(1);
        for (std::size_t i = begin; i < end; ++i) {
            loss::EmbeddingRecord rec;
            rec.sample_id = dataset[i].id;
            rec.label = dataset[i].role;
            rec.class_name = dataset[i].class_name;
            rec.embedding.assign(embeddings.data() + (i - begin) * static_cast<std::size_t>(width),
                                 embeddings.data() + (i - begin + 1) * static_cast<std::size_t>(width));
            rec.modulus = loss::modulus(rec.embedding);
            records.push_back(std::move(rec));
        }
    }
    return records;
}

ConfusionMatrix confusion(const std::vector<loss::EmbeddingRecord>& records, double tau) {
    ConfusionMatrix cm;
    for (const auto& rec : records) {
        if (rec.label == Role::Unseen) {
            throw ConfigError("confusion: record '" + rec.sample_id +
                              "' has an unseen label; map unseen classes through unseen_eval");
        }
        const bool predicted_positive = loss::classify(rec.modulus, tau) == loss::Predicted::Positive;
        if (rec.label == Role::Positive) {
            predicted_positive ? ++cm.tp : ++cm.fn;
        } else {
            predicted_positive ? ++cm.fp : ++cm.tn;
        }
    }
    return cm;
}

ThresholdReport threshold_sweep(const std::vector<loss::EmbeddingRecord>& records, const std::vector<double>& taus) {
    if (taus.empty()) throw ConfigError("threshold_sweep: tau list is empty");
    if (!std::is_sorted(taus.begin(), taus.end())) {
        throw ConfigError("threshold_sweep: tau list must be sorted ascending");
    }
    ThresholdReport report;
    report.rows.reserve(taus.size());
    for (double tau : taus) {
        ThresholdRow row;
        row.tau = tau;
        row.cm = confusion(records, tau);
        row.m = metrics(row.cm);
        report.rows.push_back(row);
    }
    return report;
}

std::vector<double> default_tau_grid() { return {0.0, 1.0, 2.0}; }

std::vector<double> fine_tau_grid(const std::vector<loss::EmbeddingRecord>& records, int steps) {
    if (steps < 2) throw ConfigError("fine_tau_grid: need at least 2 steps");
    double max_mod = 0.0;
    for (const auto& rec : records) max_mod = std::max(max_mod, rec.modulus);
    if (max_mod == 0.0) return {0.0};
    std::vector<double> taus(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) taus[static_cast<std::size_t>(i)] = max_mod * i / (steps - 1);
    return taus;
}

std::optional<std::size_t> best_positive_f1_row(const ThresholdReport& report) {
    std::optional<std::size_t> best;
    double best_f1 = -1.0;
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& f1 = report.rows[i].m.positive.f1;
        if (f1 && *f1 > best_f1) {
            best_f1 = *f1;
            best = i;
        }
    }
    return best;
}

UnseenEvalResult unseen_eval(models::Model& model, const std::vector<data::LabeledImage>& unseen_dataset,
                             const std::map<std::string, Role>& expected, const std::vector<double>& taus) {
    for (const auto& [name, side] : expected) {
        if (side == Role::Unseen) {
            throw ConfigError("unseen_eval: class '" + name + "' must map to a positive-like or negative-like side");
        }
    }
    std::vector<loss::EmbeddingRecord> records = encode_dataset(model, unseen_dataset);
    std::map<std::string, std::vector<double>> by_class;
    for (auto& rec : records) {
        const auto it = expected.find(rec.class_name);
        if (it == expected.end()) {
            throw ConfigError("unseen_eval: class '" + rec.class_name + "' has no expected mapping");
        }
        rec.label = it->second;
        by_class[rec.class_name].push_back(rec.modulus);
    }

    UnseenEvalResult result;
    result.report = threshold_sweep(records, taus);
    for (auto& [name, values] : by_class) {
        ClassModulusSummary s;
        s.class_name = name;
        s.expected = expected.at(name);
        s.count = static_cast<int>(values.size());
        std::sort(values.begin(), values.end());
        double sum = 0.0;
        for (double v : values) sum += v;
        s.mean = sum / static_cast<double>(values.size());
        const std::size_t mid = values.size() / 2;
        s.median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
        s.min_value = values.front();
        s.max_value = values.back();
        result.summaries.push_back(std::move(s));
    }
    return result;
}

// -------------------------------------------------------------- serialization --

namespace {

const char* kReportHeader =
    "# modulus-threshold report\n"
    "# convention: tp = true positives predicted positive, fp = true negatives predicted positive,\n"
    "#             fn = true positives predicted negative, tn = true negatives predicted negative\n"
    "# prediction rule: positive iff modulus > tau (strict)\n"
    "# undefined metrics (zero denominator) are left empty\n";

std::string opt_str(const std::optional<double>& v) {
    if (!v) return "";
    std::ostringstream os;
    os.precision(17);
    os << *v;
    return os.str();
}

std::optional<double> opt_parse(const std::string& text) {
    if (text.empty()) return std::nullopt;
    return std::stod(text);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

std::string report_to_csv(const ThresholdReport& report) {
    std::ostringstream os;
    os.precision(17);
    os << kReportHeader;
    os << "tau,tp,fp,fn,tn,pos_precision,pos_recall,pos_f1,neg_precision,neg_recall,neg_f1\n";
    for (const ThresholdRow& row : report.rows) {
        os << row.tau << ',' << row.cm.tp << ',' << row.cm.fp << ',' << row.cm.fn << ',' << row.cm.tn << ','
           << opt_str(row.m.positive.precision) << ',' << opt_str(row.m.positive.recall) << ','
           << opt_str(row.m.positive.f1) << ',' << opt_str(row.m.negative.precision) << ','
           << opt_str(row.m.negative.recall) << ',' << opt_str(row.m.negative.f1) << '\n';
    }
    return os.str();
}

ThresholdReport report_from_csv(const std::string& text) {
    ThresholdReport report;
    std::istringstream is(text);
    std::string line;
    bool saw_header = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {
            if (line.rfind("tau,", 0) != 0) throw DataError("report csv: missing column header");
            saw_header = true;
            continue;
        }
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != 11) {
            throw DataError("report csv: expected 11 fields, got " + std::to_string(fields.size()));
        }
        ThresholdRow row;
        row.tau = std::stod(fields[0]);
        row.cm.tp = std::stoll(fields[1]);
        row.cm.fp = std::stoll(fields[2]);
        row.cm.fn = std::stoll(fields[3]);
        row.cm.tn = std::stoll(fields[4]);
        row.m.positive.precision = opt_parse(fields[5]);
        row.m.positive.recall = opt_parse(fields[6]);
        row.m.positive.f1 = opt_parse(fields[7]);
        row.m.negative.precision = opt_parse(fields[8]);
        row.m.negative.recall = opt_parse(fields[9]);
        row.m.negative.f1 = opt_parse(fields[10]);
        report.rows.push_back(row);
    }
    if (!saw_header) throw DataError("report csv: no content");
    return report;
}

std::string report_to_table(const ThresholdReport& report) {
    std::ostringstream os;
    os << "threshold  class     precision  recall     f1         (tp/fp/fn/tn)\n";
    auto fmt = [](const std::optional<double>& v) {
        if (!v) return std::string("undefined");
        std::ostringstream f;
        f << std::fixed << std::setprecision(3) << *v;
        return f.str();
    };
    for (const ThresholdRow& row : report.rows) {
        std::ostringstream tau;
        tau << row.tau;
        os << std::left << std::setw(11) << tau.str() << std::setw(10) << "positive" << std::setw(11)
           << fmt(row.m.positive.precision) << std::setw(11) << fmt(row.m.positive.recall) << std::setw(11)
           << fmt(row.m.positive.f1) << row.cm.tp << '/' << row.cm.fp << '/' << row.cm.fn << '/' << row.cm.tn
           << '\n';
        os << std::left << std::setw(11) << "" << std::setw(10) << "negative" << std::setw(11)
           << fmt(row.m.negative.precision) << std::setw(11) << fmt(row.m.negative.recall) << std::setw(11)
           << fmt(row.m.negative.f1) << '\n';
    }
    return os.str();
}

std::string records_to_csv(const std::vector<loss::EmbeddingRecord>& records) {
    std::ostringstream os;
    os.precision(17);
    os << "sample_id,class,label,modulus\n";
    for (const auto& rec : records) {
        os << rec.sample_id << ',' << rec.class_name << ',' << role_name(rec.label) << ',' << rec.modulus << '\n';
    }
    return os.str();
}

std::string histogram_csv(const std::vector<loss::EmbeddingRecord>& records, int bins) {
    if (bins < 1) throw ConfigError("histogram_csv: need at least one bin");
    double max_mod = 0.0;
    for (const auto& rec : records) max_mod = std::max(max_mod, rec.modulus);
    if (max_mod == 0.0) max_mod = 1.0;
    std::map<std::string, std::vector<long long>> counts;
    for (const auto& rec : records) {
        auto& row = counts[rec.class_name];
        if (row.empty()) row.assign(static_cast<std::size_t>(bins), 0);
        int bin = static_cast<int>(rec.modulus / max_mod * bins);
        bin = std::clamp(bin, 0, bins - 1);
        ++row[static_cast<std::size_t>(bin)];
    }
    std::ostringstream os;
    os.precision(17);
    os << "class,bin_lo,bin_hi,count\n";
    for (const auto& [name, row] : counts) {
        for (int b = 0; b < bins; ++b) {
            os << name << ',' << max_mod * b / bins << ',' << max_mod * (b + 1) / bins << ','
               << row[static_cast<std::size_t>(b)] << '\n';
        }
    }
    return os.str();
}

std::string summaries_to_csv(const std::vector<ClassModulusSummary>& summaries) {
    std::ostringstream os;
    os.precision(17);
    os << "class,expected,count,mean_modulus,median_modulus,min_modulus,max_modulus\n";
    for (const auto& s : summaries) {
        os << s.class_name << ',' << (s.expected == Role::Positive ? "positive-like" : "negative-like") << ','
           << s.count << ',' << s.mean << ',' << s.median << ',' << s.min_value << ',' << s.max_value << '\n';
    }
    return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw DataError("cannot open '" + path + "' for writing");
    file << text;
    if (!file) throw DataError("short write to '" + path + "'");
}

}  // namespace discnn::evaluate
