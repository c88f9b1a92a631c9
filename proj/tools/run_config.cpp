#include "run_config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "metazsl/errors.hpp"
#include "metazsl/rng.hpp"

namespace metazsl::cli {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config: " + key + " expects true/false, got '" + v + "'");
}

int parse_int(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const int x = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + " expects an integer, got '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const std::uint64_t x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + " expects an unsigned integer, got '" + v + "'");
    }
}

double parse_real(const std::string& v, const std::string& key) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config: " + key + " expects a number, got '" + v + "'");
    return x;
}

std::vector<int> parse_int_list(const std::string& v, const std::string& key) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_int(item, key));
    }
    if (out.empty()) throw ConfigError("config: " + key + " expects a comma-separated list");
    return out;
}

std::string fmt_real(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

}  // namespace

ModelConfig RunConfig::model_config(int feature_dim, int attr_dim) const {
    ModelConfig cfg = ModelConfig::make(feature_dim, attr_dim, latent_dim, encoder_hidden,
                                        decoder_hidden, disc_hidden, dropout_rate);
    if (disc_mode == "critic")
        cfg.disc_mode = DiscMode::critic;
    else if (disc_mode == "probabilistic")
        cfg.disc_mode = DiscMode::probabilistic;
    else
        throw ConfigError("config: disc_mode must be critic or probabilistic");
    if (de_term_z == "posterior")
        cfg.de_term_z = DeTermZ::posterior;
    else if (de_term_z == "prior")
        cfg.de_term_z = DeTermZ::prior;
    else
        throw ConfigError("config: de_term_z must be posterior or prior");
    cfg.literal_adv_sign = literal_adv_sign;
    cfg.disc_clip = disc_clip;
    return cfg;
}

MetaConfig RunConfig::meta_config() const {
    MetaConfig meta;
    meta.eta1 = eta1;
    meta.eta2 = eta2;
    meta.inner_steps = inner_steps;
    meta.task_batch_size = task_batch_size;
    meta.outer_steps = outer_steps;
    if (outer_optimizer == "adam")
        meta.outer_kind = OptKind::adam;
    else if (outer_optimizer == "sgd")
        meta.outer_kind = OptKind::sgd;
    else
        throw ConfigError("config: outer_optimizer must be adam or sgd");
    meta.outer_lr = outer_lr;
    meta.adam_beta1 = adam_beta1;
    meta.adam_beta2 = adam_beta2;
    meta.adam_epsilon = adam_epsilon;
    meta.lambda_adv = lambda_adv;
    meta.meta_enabled = meta_enabled;
    meta.meta_on_generator = meta_on_generator;
    meta.meta_on_discriminator = meta_on_discriminator;
    meta.disjoint_tasks = disjoint_tasks;
    meta.cvae_only = cvae_only;
    meta.first_order = first_order;
    meta.checkpoint_interval = checkpoint_interval;
    meta.validate();
    return meta;
}

EpisodeConfig RunConfig::episode_config() const {
    EpisodeConfig ecfg;
    ecfg.n_way_tr = n_way_tr;
    ecfg.k_shot_tr = k_shot_tr;
    ecfg.n_way_v = n_way_v;
    ecfg.k_shot_v = k_shot_v;
    ecfg.val_from_full = val_from_full;
    ecfg.validate();
    return ecfg;
}

EvalOptions RunConfig::eval_options() const {
    EvalOptions opts;
    opts.per_class = per_class_synth;
    opts.softmax_epochs = softmax_epochs;
    opts.softmax_lr = softmax_lr;
    return opts;
}

int RunConfig::shot_count() const {
    if (shots == "all") return 0;
    const int n = parse_int(shots, "shots");
    if (n < 1) throw ConfigError("config: shots must be a positive count or 'all'");
    return n;
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "dataset_dir") cfg.dataset_dir = value;
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "seed") cfg.seed = parse_u64(value, key);
    else if (key == "shots") cfg.shots = value;
    else if (key == "latent_dim") cfg.latent_dim = parse_int(value, key);
    else if (key == "encoder_hidden") cfg.encoder_hidden = parse_int_list(value, key);
    else if (key == "decoder_hidden") cfg.decoder_hidden = parse_int_list(value, key);
    else if (key == "disc_hidden") cfg.disc_hidden = parse_int_list(value, key);
    else if (key == "dropout_rate") cfg.dropout_rate = parse_real(value, key);
    else if (key == "disc_mode") cfg.disc_mode = value;
    else if (key == "de_term_z") cfg.de_term_z = value;
    else if (key == "literal_adv_sign") cfg.literal_adv_sign = parse_bool(value, key);
    else if (key == "disc_clip") cfg.disc_clip = parse_real(value, key);
    else if (key == "lambda_adv") cfg.lambda_adv = parse_real(value, key);
    else if (key == "n_way_tr") cfg.n_way_tr = parse_int(value, key);
    else if (key == "k_shot_tr") cfg.k_shot_tr = parse_int(value, key);
    else if (key == "n_way_v") cfg.n_way_v = parse_int(value, key);
    else if (key == "k_shot_v") cfg.k_shot_v = parse_int(value, key);
    else if (key == "val_from_full") cfg.val_from_full = parse_bool(value, key);
    else if (key == "eta1") cfg.eta1 = parse_real(value, key);
    else if (key == "eta2") cfg.eta2 = parse_real(value, key);
    else if (key == "inner_steps") cfg.inner_steps = parse_int(value, key);
    else if (key == "task_batch_size") cfg.task_batch_size = parse_int(value, key);
    else if (key == "outer_steps") cfg.outer_steps = parse_int(value, key);
    else if (key == "outer_optimizer") cfg.outer_optimizer = value;
    else if (key == "outer_lr") cfg.outer_lr = parse_real(value, key);
    else if (key == "adam_beta1") cfg.adam_beta1 = parse_real(value, key);
    else if (key == "adam_beta2") cfg.adam_beta2 = parse_real(value, key);
    else if (key == "adam_epsilon") cfg.adam_epsilon = parse_real(value, key);
    else if (key == "meta_enabled") cfg.meta_enabled = parse_bool(value, key);
    else if (key == "meta_on_generator") cfg.meta_on_generator = parse_bool(value, key);
    else if (key == "meta_on_discriminator") cfg.meta_on_discriminator = parse_bool(value, key);
    else if (key == "disjoint_tasks") cfg.disjoint_tasks = parse_bool(value, key);
    else if (key == "cvae_only") cfg.cvae_only = parse_bool(value, key);
    else if (key == "first_order") cfg.first_order = parse_bool(value, key);
    else if (key == "checkpoint_interval") cfg.checkpoint_interval = parse_int(value, key);
    else if (key == "episode_log") cfg.episode_log = parse_bool(value, key);
    else if (key == "per_class_synth") cfg.per_class_synth = parse_int(value, key);
    else if (key == "softmax_epochs") cfg.softmax_epochs = parse_int(value, key);
    else if (key == "softmax_lr") cfg.softmax_lr = parse_real(value, key);
    else throw ConfigError("config: unknown key '" + key + "'");
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("could not open config file " + path);
    RunConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(line_no) + " is not key = value");
        apply_key(cfg, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
    return cfg;
}

std::string dump_run_config(const RunConfig& c) {
    std::ostringstream out;
    out << "dataset_dir = " << c.dataset_dir << '\n';
    out << "out_dir = " << c.out_dir << '\n';
    out << "seed = " << c.seed << '\n';
    out << "shots = " << c.shots << '\n';
    out << "latent_dim = " << c.latent_dim << '\n';
    out << "encoder_hidden = " << fmt_list(c.encoder_hidden) << '\n';
    out << "decoder_hidden = " << fmt_list(c.decoder_hidden) << '\n';
    out << "disc_hidden = " << fmt_list(c.disc_hidden) << '\n';
    out << "dropout_rate = " << fmt_real(c.dropout_rate) << '\n';
    out << "disc_mode = " << c.disc_mode << '\n';
    out << "de_term_z = " << c.de_term_z << '\n';
    out << "literal_adv_sign = " << (c.literal_adv_sign ? "true" : "false") << '\n';
    out << "disc_clip = " << fmt_real(c.disc_clip) << '\n';
    out << "lambda_adv = " << fmt_real(c.lambda_adv) << '\n';
    out << "n_way_tr = " << c.n_way_tr << '\n';
    out << "k_shot_tr = " << c.k_shot_tr << '\n';
    out << "n_way_v = " << c.n_way_v << '\n';
    out << "k_shot_v = " << c.k_shot_v << '\n';
    out << "val_from_full = " << (c.val_from_full ? "true" : "false") << '\n';
    out << "eta1 = " << fmt_real(c.eta1) << '\n';
    out << "eta2 = " << fmt_real(c.eta2) << '\n';
    out << "inner_steps = " << c.inner_steps << '\n';
    out << "task_batch_size = " << c.task_batch_size << '\n';
    out << "outer_steps = " << c.outer_steps << '\n';
    out << "outer_optimizer = " << c.outer_optimizer << '\n';
    out << "outer_lr = " << fmt_real(c.outer_lr) << '\n';
    out << "adam_beta1 = " << fmt_real(c.adam_beta1) << '\n';
    out << "adam_beta2 = " << fmt_real(c.adam_beta2) << '\n';
    out << "adam_epsilon = " << fmt_real(c.adam_epsilon) << '\n';
    out << "meta_enabled = " << (c.meta_enabled ? "true" : "false") << '\n';
    out << "meta_on_generator = " << (c.meta_on_generator ? "true" : "false") << '\n';
    out << "meta_on_discriminator = " << (c.meta_on_discriminator ? "true" : "false") << '\n';
    out << "disjoint_tasks = " << (c.disjoint_tasks ? "true" : "false") << '\n';
    out << "cvae_only = " << (c.cvae_only ? "true" : "false") << '\n';
    out << "first_order = " << (c.first_order ? "true" : "false") << '\n';
    out << "checkpoint_interval = " << c.checkpoint_interval << '\n';
    out << "episode_log = " << (c.episode_log ? "true" : "false") << '\n';
    out << "per_class_synth = " << c.per_class_synth << '\n';
    out << "softmax_epochs = " << c.softmax_epochs << '\n';
    out << "softmax_lr = " << fmt_real(c.softmax_lr) << '\n';
    return out.str();
}

std::uint64_t sub_seed(std::uint64_t master, std::uint64_t tag) {
    return Rng(master).derive(tag).seed();
}

}  // namespace metazsl::cli
