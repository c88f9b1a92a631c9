#include "metazsl/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "metazsl/errors.hpp"
#include "metazsl/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace metazsl {

namespace {

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
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

double parse_real(const std::string& s, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw DataError("could not parse number '" + s + "' in " + where);
    return v;
}

int parse_int(const std::string& s, const std::string& where) {
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0')
        throw DataError("could not parse integer '" + s + "' in " + where);
    return static_cast<int>(v);
}

std::ifstream open_or_throw(const fs::path& p) {
    if (!fs::exists(p)) throw DataError("missing file: " + p.string());
    std::ifstream f(p);
    if (!f) throw DataError("could not open: " + p.string());
    return f;
}

}  // namespace

std::vector<double> DatasetBundle::attribute_for(int class_id) const {
    for (std::size_t i = 0; i < attr_class_ids.size(); ++i) {
        if (attr_class_ids[i] == class_id) {
            const double* row = attributes.row(static_cast<int>(i));
            return std::vector<double>(row, row + attr_dim);
        }
    }
    throw DataError("no attribute vector for class " + std::to_string(class_id));
}

std::vector<int> DatasetBundle::train_rows() const {
    std::set<int> test(test_seen_rows.begin(), test_seen_rows.end());
    test.insert(test_unseen_rows.begin(), test_unseen_rows.end());
    std::set<int> seen(seen_classes.begin(), seen_classes.end());
    std::vector<int> rows;
    for (int r = 0; r < row_count(); ++r)
        if (!test.count(r) && seen.count(labels[r])) rows.push_back(r);
    return rows;
}

void DatasetBundle::validate() const {
    if (feature_dim < 1 || attr_dim < 1)
        throw DataError("bundle '" + name + "': dimensions must be positive");
    if (features.cols != feature_dim)
        throw DataError("bundle '" + name + "': feature matrix width != feature_dim");
    if (static_cast<int>(labels.size()) != features.rows)
        throw DataError("bundle '" + name + "': one label required per feature row");
    if (attributes.cols != attr_dim)
        throw DataError("bundle '" + name + "': attribute matrix width != attr_dim");
    if (attributes.rows != static_cast<int>(attr_class_ids.size()))
        throw DataError("bundle '" + name + "': one attribute row required per class");

    std::set<int> attr_ids(attr_class_ids.begin(), attr_class_ids.end());
    if (attr_ids.size() != attr_class_ids.size())
        throw DataError("bundle '" + name + "': duplicate class in attributes");

    std::set<int> seen(seen_classes.begin(), seen_classes.end());
    std::set<int> unseen(unseen_classes.begin(), unseen_classes.end());
    for (int c : seen)
        if (unseen.count(c))
            throw DataError("bundle '" + name + "': class " + std::to_string(c) +
                            " listed as both seen and unseen");
    for (int c : seen_classes)
        if (!attr_ids.count(c))
            throw DataError("bundle '" + name + "': seen class " + std::to_string(c) +
                            " has no attribute row");
    for (int c : unseen_classes)
        if (!attr_ids.count(c))
            throw DataError("bundle '" + name + "': unseen class " + std::to_string(c) +
                            " has no attribute row");

    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int c = labels[i];
        if (!seen.count(c) && !unseen.count(c))
            throw DataError("bundle '" + name + "': row " + std::to_string(i) +
                            " has unknown class " + std::to_string(c));
    }

    auto check_rows = [&](const std::vector<int>& rows, const char* which) {
        std::set<int> dedup;
        for (int r : rows) {
            if (r < 0 || r >= row_count())
                throw DataError("bundle '" + name + "': " + which + " row index " +
                                std::to_string(r) + " out of range");
            if (!dedup.insert(r).second)
                throw DataError("bundle '" + name + "': duplicate " + which + " row " +
                                std::to_string(r));
        }
    };
    check_rows(test_seen_rows, "test_seen");
    check_rows(test_unseen_rows, "test_unseen");
    for (int r : test_seen_rows)
        if (!seen.count(labels[r]))
            throw DataError("bundle '" + name + "': test_seen row " + std::to_string(r) +
                            " is not labeled with a seen class");
    for (int r : test_unseen_rows)
        if (!unseen.count(labels[r]))
            throw DataError("bundle '" + name + "': test_unseen row " + std::to_string(r) +
                            " is not labeled with an unseen class");

    // Unseen classes must have no training rows at all.
    std::set<int> unseen_test(test_unseen_rows.begin(), test_unseen_rows.end());
    for (int r = 0; r < row_count(); ++r)
        if (unseen.count(labels[r]) && !unseen_test.count(r))
            throw DataError("bundle '" + name + "': unseen class " + std::to_string(labels[r]) +
                            " has a non-test row " + std::to_string(r));

    if (!features.is_finite())
        throw DataError("bundle '" + name + "': non-finite feature value");
    if (!attributes.is_finite())
        throw DataError("bundle '" + name + "': non-finite attribute value");
}

DatasetBundle load_bundle(const std::string& dir_path) {
    const fs::path dir(dir_path);
    DatasetBundle b;

    {
        std::ifstream f = open_or_throw(dir / "meta.json");
        json meta;
        try {
            f >> meta;
        } catch (const json::exception& e) {
            throw DataError("meta.json parse error: " + std::string(e.what()));
        }
        b.name = meta.at("name").get<std::string>();
        b.feature_dim = meta.at("feature_dim").get<int>();
        b.attr_dim = meta.at("attr_dim").get<int>();
        b.attr_class_ids = meta.at("classes").get<std::vector<int>>();
        b.seen_classes = meta.at("seen").get<std::vector<int>>();
        b.unseen_classes = meta.at("unseen").get<std::vector<int>>();
        b.test_seen_rows = meta.at("test_seen_rows").get<std::vector<int>>();
        b.test_unseen_rows = meta.at("test_unseen_rows").get<std::vector<int>>();
    }

    {
        std::ifstream f = open_or_throw(dir / "features.csv");
        std::string line;
        if (!std::getline(f, line)) throw DataError("features.csv: empty file");
        const auto header = split_csv(line);
        if (header.size() != static_cast<std::size_t>(b.feature_dim) + 2 ||
            header[0] != "row_id" || header[1] != "label")
            throw DataError("features.csv: header does not match feature_dim " +
                            std::to_string(b.feature_dim));
        std::vector<double> values;
        int row = 0;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            const auto fields = split_csv(line);
            if (fields.size() != static_cast<std::size_t>(b.feature_dim) + 2)
                throw DataError("features.csv: row " + std::to_string(row) +
                                " has wrong column count");
            if (parse_int(fields[0], "features.csv") != row)
                throw DataError("features.csv: row_id out of order at row " +
                                std::to_string(row));
            b.labels.push_back(parse_int(fields[1], "features.csv"));
            for (int j = 0; j < b.feature_dim; ++j)
                values.push_back(parse_real(fields[2 + j], "features.csv"));
            ++row;
        }
        b.features = Matrix(row, b.feature_dim, std::move(values));
    }

    {
        std::ifstream f = open_or_throw(dir / "attributes.csv");
        std::string line;
        if (!std::getline(f, line)) throw DataError("attributes.csv: empty file");
        const auto header = split_csv(line);
        if (header.size() != static_cast<std::size_t>(b.attr_dim) + 1 ||
            header[0] != "class_id")
            throw DataError("attributes.csv: header does not match attr_dim " +
                            std::to_string(b.attr_dim));
        std::vector<double> values;
        std::vector<int> ids;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            const auto fields = split_csv(line);
            if (fields.size() != static_cast<std::size_t>(b.attr_dim) + 1)
                throw DataError("attributes.csv: wrong column count");
            ids.push_back(parse_int(fields[0], "attributes.csv"));
            for (int j = 0; j < b.attr_dim; ++j)
                values.push_back(parse_real(fields[1 + j], "attributes.csv"));
        }
        if (ids != b.attr_class_ids)
            throw DataError("attributes.csv: class order differs from meta.json");
        b.attributes = Matrix(static_cast<int>(ids.size()), b.attr_dim, std::move(values));
    }

    b.validate();
    return b;
}

void save_bundle(const DatasetBundle& bundle, const std::string& dir_path) {
    bundle.validate();
    const fs::path dir(dir_path);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("could not create directory " + dir.string());

    {
        json meta;
        meta["name"] = bundle.name;
        meta["feature_dim"] = bundle.feature_dim;
        meta["attr_dim"] = bundle.attr_dim;
        meta["classes"] = bundle.attr_class_ids;
        meta["seen"] = bundle.seen_classes;
        meta["unseen"] = bundle.unseen_classes;
        meta["test_seen_rows"] = bundle.test_seen_rows;
        meta["test_unseen_rows"] = bundle.test_unseen_rows;
        std::ofstream f(dir / "meta.json");
        if (!f) throw DataError("could not write " + (dir / "meta.json").string());
        f << meta.dump(2) << '\n';
    }

    {
        std::ofstream f(dir / "features.csv");
        if (!f) throw DataError("could not write " + (dir / "features.csv").string());
        f << "row_id,label";
        for (int j = 0; j < bundle.feature_dim; ++j) f << ",f" << j;
        f << '\n';
        for (int r = 0; r < bundle.row_count(); ++r) {
            f << r << ',' << bundle.labels[r];
            const double* row = bundle.features.row(r);
            for (int j = 0; j < bundle.feature_dim; ++j) f << ',' << fmt_real(row[j]);
            f << '\n';
        }
    }

    {
        std::ofstream f(dir / "attributes.csv");
        if (!f) throw DataError("could not write " + (dir / "attributes.csv").string());
        f << "class_id";
        for (int j = 0; j < bundle.attr_dim; ++j) f << ",a" << j;
        f << '\n';
        for (int i = 0; i < bundle.attributes.rows; ++i) {
            f << bundle.attr_class_ids[i];
            const double* row = bundle.attributes.row(i);
            for (int j = 0; j < bundle.attr_dim; ++j) f << ',' << fmt_real(row[j]);
            f << '\n';
        }
    }
}

void SyntheticBenchSpec::validate() const {
    if (n_seen < 1 || n_unseen < 0) throw ConfigError("synthetic spec: class counts invalid");
    if (feature_dim < 1 || attr_dim < 1 || attr_dim > feature_dim)
        throw ConfigError("synthetic spec: need 1 <= attr_dim <= feature_dim");
    if (cluster_std <= 0.0) throw ConfigError("synthetic spec: cluster_std must be positive");
    if (examples_per_class < 1)
        throw ConfigError("synthetic spec: examples_per_class must be positive");
    if (seen_test_fraction < 0.0 || seen_test_fraction >= 1.0)
        throw ConfigError("synthetic spec: seen_test_fraction must be in [0, 1)");
}

std::vector<double> SyntheticBench::mean_for(int class_id) const {
    for (std::size_t i = 0; i < mean_class_ids.size(); ++i)
        if (mean_class_ids[i] == class_id) {
            const double* row = class_means.row(static_cast<int>(i));
            return std::vector<double>(row, row + class_means.cols);
        }
    throw DataError("no oracle mean for class " + std::to_string(class_id));
}

SyntheticBench make_synthetic(const SyntheticBenchSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const int n_cls = spec.n_seen + spec.n_unseen;
    const int d = spec.feature_dim, da = spec.attr_dim;

    // Latent class coordinates and the subspace the means live in.
    const Matrix latent = gaussian_sample(rng, n_cls, da);
    const Matrix basis = gaussian_sample(rng, da, d);
    Matrix means = matmul(latent, basis);
    const double scale = 1.0 / std::sqrt(static_cast<double>(da));
    for (double& v : means.data) v *= scale;

    // Attributes as a noisy projection of the means.
    const Matrix proj = gaussian_sample(rng, d, da);
    Matrix attrs = matmul(means, proj);
    const double pscale = 1.0 / std::sqrt(static_cast<double>(d));
    for (double& v : attrs.data) v *= pscale;
    if (spec.attr_noise > 0.0) {
        const Matrix noise = gaussian_sample(rng, n_cls, da);
        for (std::size_t i = 0; i < attrs.data.size(); ++i)
            attrs.data[i] += spec.attr_noise * noise.data[i];
    }

    SyntheticBench bench;
    bench.class_means = means;
    DatasetBundle& b = bench.bundle;
    b.name = "synthetic";
    b.feature_dim = d;
    b.attr_dim = da;
    b.attributes = attrs;
    for (int c = 0; c < n_cls; ++c) {
        b.attr_class_ids.push_back(c);
        bench.mean_class_ids.push_back(c);
        if (c < spec.n_seen)
            b.seen_classes.push_back(c);
        else
            b.unseen_classes.push_back(c);
    }

    const int seen_test =
        std::min(spec.examples_per_class - 1,
                 static_cast<int>(std::ceil(spec.seen_test_fraction * spec.examples_per_class)));
    b.features = Matrix(n_cls * spec.examples_per_class, d);
    int row = 0;
    for (int c = 0; c < n_cls; ++c) {
        const double* mean = means.row(c);
        for (int e = 0; e < spec.examples_per_class; ++e, ++row) {
            double* out = b.features.row(row);
            for (int j = 0; j < d; ++j) out[j] = mean[j] + spec.cluster_std * rng.normal();
            b.labels.push_back(c);
            if (c >= spec.n_seen)
                b.test_unseen_rows.push_back(row);
            else if (e >= spec.examples_per_class - seen_test)
                b.test_seen_rows.push_back(row);
        }
    }

    b.validate();
    return bench;
}

}  // namespace metazsl
