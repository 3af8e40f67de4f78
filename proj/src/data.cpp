#include "ofatad/data.hpp"

#include "ofatad/error.hpp"
#include "ofatad/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace ofatad {

namespace {

// RFC-4180 style field splitting for a single physical line.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    if (quoted) fail(Errc::MalformedCsv, "unterminated quote on line " + std::to_string(line_no));
    fields.push_back(std::move(field));
    return fields;
}

std::string trim(std::string_view s) {
    auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) return {};
    auto end = s.find_last_not_of(" \t\r");
    return std::string(s.substr(begin, end - begin + 1));
}

bool is_missing_token(const std::string& s) {
    return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "?";
}

std::optional<double> parse_number(const std::string& s) {
    double value = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return value;
}

struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
};

RawTable read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::IoError, "cannot open " + path.string());
    RawTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
            line.erase(0, 3);
        }
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line, line_no);
        for (auto& f : fields) f = trim(f);
        if (table.header.empty()) {
            table.header = std::move(fields);
            continue;
        }
        if (fields.size() != table.header.size()) {
            fail(Errc::MalformedCsv, path.string() + ": line " + std::to_string(line_no) + " has " +
                                         std::to_string(fields.size()) + " fields, header has " +
                                         std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(fields));
        table.line_numbers.push_back(line_no);
    }
    if (table.header.empty()) fail(Errc::MalformedCsv, path.string() + ": missing header row");
    return table;
}

Matrix parse_features(const RawTable& table, const std::vector<std::size_t>& columns,
                      MissingPolicy missing, const std::filesystem::path& path) {
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    const auto d = static_cast<Eigen::Index>(columns.size());
    Matrix features(n, d);
    std::vector<std::vector<Eigen::Index>> holes(columns.size());
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& fields = table.rows[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < d; ++c) {
            const auto col = columns[static_cast<std::size_t>(c)];
            const auto& cell = fields[col];
            if (is_missing_token(cell)) {
                if (missing == MissingPolicy::Reject) {
                    fail(Errc::MissingValue, path.string() + ": missing value in column '" + table.header[col] +
                                                 "' on line " +
                                                 std::to_string(table.line_numbers[static_cast<std::size_t>(r)]));
                }
                holes[static_cast<std::size_t>(c)].push_back(r);
                features(r, c) = 0.0;
                continue;
            }
            auto value = parse_number(cell);
            if (!value || !std::isfinite(*value)) {
                fail(Errc::MalformedCsv, path.string() + ": non-numeric value '" + cell + "' in column '" +
                                             table.header[col] + "' on line " +
                                             std::to_string(table.line_numbers[static_cast<std::size_t>(r)]));
            }
            features(r, c) = *value;
        }
    }
    for (Eigen::Index c = 0; c < d; ++c) {
        const auto& missing_rows = holes[static_cast<std::size_t>(c)];
        if (missing_rows.empty()) continue;
        if (static_cast<Eigen::Index>(missing_rows.size()) == n) {
            fail(Errc::AllMissingColumn,
                 path.string() + ": column '" + table.header[columns[static_cast<std::size_t>(c)]] + "' has no values");
        }
        double sum = 0.0;
        std::size_t present = 0;
        std::size_t next_hole = 0;
        for (Eigen::Index r = 0; r < n; ++r) {
            if (next_hole < missing_rows.size() && missing_rows[next_hole] == r) {
                ++next_hole;
                continue;
            }
            sum += features(r, c);
            ++present;
        }
        const double mean = sum / static_cast<double>(present);
        for (auto r : missing_rows) features(r, c) = mean;
    }
    return features;
}

}  // namespace

std::size_t Dataset::count_anomalies() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column, MissingPolicy missing) {
    const RawTable table = read_table(path);
    auto label_it = std::find(table.header.begin(), table.header.end(), label_column);
    if (label_it == table.header.end()) {
        fail(Errc::MalformedCsv, path.string() + ": label column '" + label_column + "' not found");
    }
    const auto label_col = static_cast<std::size_t>(label_it - table.header.begin());
    std::vector<std::size_t> columns;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c != label_col) columns.push_back(c);
    }
    if (columns.empty()) fail(Errc::MalformedCsv, path.string() + ": no feature columns");
    if (table.rows.size() < 2) fail(Errc::MalformedCsv, path.string() + ": need at least 2 data rows");

    Dataset ds;
    ds.name = path.stem().string();
    ds.features = parse_features(table, columns, missing, path);
    ds.labels.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& cell = table.rows[r][label_col];
        auto value = parse_number(cell);
        if (!value || (*value != 0.0 && *value != 1.0)) {
            fail(Errc::NonBinaryLabel, path.string() + ": label '" + cell + "' on line " +
                                           std::to_string(table.line_numbers[r]) + " is not 0 or 1");
        }
        ds.labels.push_back(*value == 1.0 ? 1 : 0);
    }
    return ds;
}

Matrix load_feature_csv(const std::filesystem::path& path, const std::vector<std::string>& drop_columns,
                        MissingPolicy missing) {
    const RawTable table = read_table(path);
    std::vector<std::size_t> columns;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (std::find(drop_columns.begin(), drop_columns.end(), table.header[c]) == drop_columns.end()) {
            columns.push_back(c);
        }
    }
    if (columns.empty()) fail(Errc::MalformedCsv, path.string() + ": no feature columns");
    if (table.rows.empty()) fail(Errc::MalformedCsv, path.string() + ": no data rows");
    return parse_features(table, columns, missing, path);
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& dataset) {
    std::ostringstream out;
    for (std::size_t c = 0; c < dataset.dims(); ++c) out << 'x' << c << ',';
    out << "label\n";
    for (std::size_t r = 0; r < dataset.rows(); ++r) {
        for (std::size_t c = 0; c < dataset.dims(); ++c) {
            out << format_double(dataset.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))) << ',';
        }
        out << static_cast<int>(dataset.labels[r]) << '\n';
    }
    write_file_atomic(path, out.str());
}

OneClassSplit split_one_class(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        fail(Errc::InvalidArgument, "train_fraction must lie in (0, 1)");
    }
    std::vector<std::size_t> normals;
    std::vector<std::size_t> anomalies;
    for (std::size_t r = 0; r < dataset.rows(); ++r) {
        (dataset.labels[r] == 0 ? normals : anomalies).push_back(r);
    }
    if (normals.size() < 2) {
        fail(Errc::TooFewNormals, dataset.name + " has " + std::to_string(normals.size()) + " normal rows, need 2");
    }
    std::mt19937_64 rng(seed);
    std::shuffle(normals.begin(), normals.end(), rng);

    auto n_train = static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(normals.size()) - 1e-12));
    n_train = std::clamp<std::size_t>(n_train, 1, normals.size() - 1);

    OneClassSplit split;
    split.train_rows.assign(normals.begin(), normals.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test_rows.assign(normals.begin() + static_cast<std::ptrdiff_t>(n_train), normals.end());
    split.test_rows.insert(split.test_rows.end(), anomalies.begin(), anomalies.end());
    std::sort(split.train_rows.begin(), split.train_rows.end());
    std::sort(split.test_rows.begin(), split.test_rows.end());

    split.train_normals = select_rows(dataset.features, split.train_rows);
    split.test_features = select_rows(dataset.features, split.test_rows);
    split.test_labels.reserve(split.test_rows.size());
    for (auto r : split.test_rows) split.test_labels.push_back(dataset.labels[r]);
    return split;
}

SourcePool pool_sources(const std::vector<std::pair<std::string, OneClassSplit>>& splits) {
    if (splits.empty()) fail(Errc::EmptyPool, "no source datasets given");
    SourcePool pool;
    pool.datasets.reserve(splits.size());
    for (const auto& [name, split] : splits) {
        if (split.train_normals.rows() < 1 || split.train_normals.cols() < 1) {
            fail(Errc::EmptyPool, "source '" + name + "' has an empty training split");
        }
        pool.datasets.emplace_back(name, split.train_normals);
    }
    return pool;
}

}  // namespace ofatad
