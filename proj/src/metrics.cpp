#include "ofatad/metrics.hpp"

#include "ofatad/error.hpp"
#include "ofatad/io.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace ofatad {

namespace {

void check_lengths(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) {
        fail(Errc::LengthMismatch,
             std::to_string(scores.size()) + " scores vs " + std::to_string(labels.size()) + " labels");
    }
}

std::size_t count_positives(std::span<const std::uint8_t> labels) {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

std::vector<std::size_t> order_by_score_desc(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    check_lengths(scores, labels);
    const std::size_t pos = count_positives(labels);
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0) fail(Errc::SingleClass, "AUROC needs both classes");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Sum of 1-based midranks of the positives.
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t) {
            if (labels[order[t]] == 1) rank_sum += midrank;
        }
        i = j;
    }
    const double p = static_cast<double>(pos);
    const double u = rank_sum - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(neg));
}

double auprc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    check_lengths(scores, labels);
    const std::size_t pos = count_positives(labels);
    if (pos == 0) fail(Errc::NoPositives, "AUPRC needs at least one positive");
    const auto order = order_by_score_desc(scores);
    double ap = 0.0;
    double prev_recall = 0.0;
    std::size_t tp = 0;
    std::size_t seen = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            tp += labels[order[j]];
            ++j;
        }
        seen = j;
        const double recall = static_cast<double>(tp) / static_cast<double>(pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(seen);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    return ap;
}

double empirical_quantile(std::vector<double> values, double q) {
    if (values.empty()) fail(Errc::EmptyBatch, "quantile of no values");
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

F1Result f1_at_percentile(std::span<const double> scores, std::span<const std::uint8_t> labels, double ratio) {
    check_lengths(scores, labels);
    const std::size_t pos = count_positives(labels);
    if (pos == 0 || pos == labels.size()) fail(Errc::SingleClass, "F1 needs both classes");
    if (!(ratio > 0.0 && ratio < 1.0)) fail(Errc::RatioOutOfRange, "ratio must lie in (0, 1)");
    F1Result out;
    out.threshold = empirical_quantile({scores.begin(), scores.end()}, 1.0 - ratio);
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool flagged = scores[i] > out.threshold;
        if (flagged && labels[i] == 1) ++tp;
        else if (flagged) ++fp;
        else if (labels[i] == 1) ++fn;
    }
    out.f1 = tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    return out;
}

std::vector<double> average_rank(const std::vector<std::vector<double>>& table) {
    if (table.empty()) fail(Errc::IncompleteTable, "no methods");
    const std::size_t datasets = table.front().size();
    if (datasets == 0) fail(Errc::IncompleteTable, "no datasets");
    for (const auto& row : table) {
        if (row.size() != datasets ||
            std::any_of(row.begin(), row.end(), [](double v) { return !std::isfinite(v); })) {
            fail(Errc::IncompleteTable, "every method needs a finite value for every dataset");
        }
    }
    const std::size_t methods = table.size();
    std::vector<double> ranks(methods, 0.0);
    for (std::size_t d = 0; d < datasets; ++d) {
        std::vector<std::size_t> order(methods);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return table[a][d] > table[b][d]; });
        for (std::size_t i = 0; i < methods;) {
            std::size_t j = i;
            while (j < methods && table[order[j]][d] == table[order[i]][d]) ++j;
            const double midrank = 0.5 * static_cast<double>(i + 1 + j);
            for (std::size_t t = i; t < j; ++t) ranks[order[t]] += midrank;
            i = j;
        }
    }
    for (double& r : ranks) r /= static_cast<double>(datasets);
    return ranks;
}

ReportRow evaluate_scores(const std::string& name, std::span<const double> scores,
                          std::span<const std::uint8_t> labels, std::optional<double> f1_ratio) {
    ReportRow row;
    row.name = name;
    row.n_test = scores.size();
    row.anomaly_ratio = static_cast<double>(count_positives(labels)) / static_cast<double>(labels.size());
    row.auroc = auroc(scores, labels);
    row.auprc = auprc(scores, labels);
    const auto f1 = f1_at_percentile(scores, labels, f1_ratio.value_or(row.anomaly_ratio));
    row.f1 = f1.f1;
    row.threshold = f1.threshold;
    return row;
}

ReportRow EvaluationReport::mean_row() const {
    ReportRow mean;
    mean.name = "Average";
    if (rows.empty()) return mean;
    const double n = static_cast<double>(rows.size());
    for (const auto& r : rows) {
        mean.auroc += r.auroc;
        mean.auprc += r.auprc;
        mean.f1 += r.f1;
        mean.threshold += r.threshold;
        mean.n_test += r.n_test;
        mean.anomaly_ratio += r.anomaly_ratio;
    }
    mean.auroc /= n;
    mean.auprc /= n;
    mean.f1 /= n;
    mean.threshold /= n;
    mean.anomaly_ratio /= n;
    return mean;
}

std::string EvaluationReport::to_csv() const {
    std::ostringstream out;
    out << "dataset,auroc,auprc,f1,threshold,n_test,anomaly_ratio\n";
    auto emit = [&](const ReportRow& r) {
        out << csv_field(r.name) << ',' << format_double(r.auroc) << ',' << format_double(r.auprc) << ',' << format_double(r.f1)
            << ',' << format_double(r.threshold) << ',' << r.n_test << ',' << format_double(r.anomaly_ratio) << '\n';
    };
    for (const auto& r : rows) emit(r);
    if (!rows.empty()) emit(mean_row());
    return out.str();
}

std::string EvaluationReport::to_table() const {
    std::size_t width = 7;
    for (const auto& r : rows) width = std::max(width, r.name.size());
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(width)) << "Dataset" << std::right << std::setw(9) << "AUROC"
        << std::setw(9) << "AUPRC" << std::setw(9) << "F1" << std::setw(8) << "n" << '\n';
    out << std::string(width + 35, '-') << '\n';
    out << std::fixed << std::setprecision(4);
    auto emit = [&](const ReportRow& r) {
        out << std::left << std::setw(static_cast<int>(width)) << r.name << std::right << std::setw(9) << r.auroc
            << std::setw(9) << r.auprc << std::setw(9) << r.f1 << std::setw(8) << r.n_test << '\n';
    };
    for (const auto& r : rows) emit(r);
    if (!rows.empty()) {
        out << std::string(width + 35, '-') << '\n';
        emit(mean_row());
    }
    for (const auto& s : skipped) out << "skipped (single class): " << s << '\n';
    return out.str();
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) fail(Errc::LengthMismatch, "x and y differ in length");
    LineFit fit;
    if (x.size() < 2) return fit;
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) return fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - *fit.slope * mx;
    for (std::size_t i = 0; i < x.size(); ++i) fit.residuals.push_back(y[i] - (*fit.intercept + *fit.slope * x[i]));
    return fit;
}

}  // namespace ofatad
