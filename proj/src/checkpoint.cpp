#include "metazsl/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "metazsl/errors.hpp"

namespace metazsl {

namespace {

template <typename T>
void write_pod(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f, const std::string& path) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw DataError("truncated checkpoint: " + path);
    return v;
}

void write_doubles(std::ofstream& f, const std::vector<double>& v) {
    write_pod<std::uint64_t>(f, v.size());
    f.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_doubles(std::ifstream& f, const std::string& path) {
    const auto n = read_pod<std::uint64_t>(f, path);
    std::vector<double> v(n);
    f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!f) throw DataError("truncated checkpoint: " + path);
    return v;
}

void write_spec(std::ofstream& f, const MlpSpec& spec) {
    write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(spec.widths.size()));
    for (int w : spec.widths) write_pod<std::int32_t>(f, w);
    for (Activation a : spec.activations)
        write_pod<std::uint8_t>(f, a == Activation::relu ? 1 : 0);
    write_pod<double>(f, spec.dropout_rate);
}

MlpSpec read_spec(std::ifstream& f, const std::string& path) {
    MlpSpec spec;
    const auto n = read_pod<std::uint32_t>(f, path);
    for (std::uint32_t i = 0; i < n; ++i)
        spec.widths.push_back(read_pod<std::int32_t>(f, path));
    for (std::uint32_t i = 0; i + 1 < n; ++i)
        spec.activations.push_back(read_pod<std::uint8_t>(f, path) ? Activation::relu
                                                                   : Activation::linear);
    spec.dropout_rate = read_pod<double>(f, path);
    return spec;
}

void write_opt(std::ofstream& f, const OptimizerState& s) {
    write_pod<std::uint8_t>(f, s.kind == OptKind::adam ? 1 : 0);
    write_pod<std::int64_t>(f, s.step_count);
    write_pod<double>(f, s.learning_rate);
    write_pod<double>(f, s.beta1);
    write_pod<double>(f, s.beta2);
    write_pod<double>(f, s.epsilon);
    write_doubles(f, s.m);
    write_doubles(f, s.v);
}

OptimizerState read_opt(std::ifstream& f, const std::string& path) {
    OptimizerState s;
    s.kind = read_pod<std::uint8_t>(f, path) ? OptKind::adam : OptKind::sgd;
    s.step_count = read_pod<std::int64_t>(f, path);
    s.learning_rate = read_pod<double>(f, path);
    s.beta1 = read_pod<double>(f, path);
    s.beta2 = read_pod<double>(f, path);
    s.epsilon = read_pod<double>(f, path);
    s.m = read_doubles(f, path);
    s.v = read_doubles(f, path);
    return s;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    ck.config.validate();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("could not write checkpoint: " + path);
    f.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    write_pod<std::uint32_t>(f, kCheckpointVersion);

    write_pod<std::int32_t>(f, ck.config.feature_dim);
    write_pod<std::int32_t>(f, ck.config.attr_dim);
    write_pod<std::int32_t>(f, ck.config.latent_dim);
    write_spec(f, ck.config.encoder);
    write_spec(f, ck.config.decoder);
    write_spec(f, ck.config.discriminator);
    write_pod<double>(f, ck.config.dropout_rate);
    write_pod<std::uint8_t>(f, ck.config.disc_mode == DiscMode::probabilistic ? 1 : 0);
    write_pod<std::uint8_t>(f, ck.config.de_term_z == DeTermZ::prior ? 1 : 0);
    write_pod<std::uint8_t>(f, ck.config.literal_adv_sign ? 1 : 0);
    write_pod<double>(f, ck.config.disc_clip);

    write_doubles(f, ck.params.theta_e.values);
    write_doubles(f, ck.params.theta_g.values);
    write_doubles(f, ck.params.theta_d.values);
    write_opt(f, ck.opt_eg);
    write_opt(f, ck.opt_d);
    write_pod<std::uint64_t>(f, ck.seed);
    write_pod<std::uint64_t>(f, ck.step);
    if (!f) throw DataError("write error on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("could not open checkpoint: " + path);
    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw DataError("not a checkpoint file: " + path);
    const auto version = read_pod<std::uint32_t>(f, path);
    if (version != kCheckpointVersion)
        throw DataError("unsupported checkpoint version " + std::to_string(version));

    Checkpoint ck;
    ck.config.feature_dim = read_pod<std::int32_t>(f, path);
    ck.config.attr_dim = read_pod<std::int32_t>(f, path);
    ck.config.latent_dim = read_pod<std::int32_t>(f, path);
    ck.config.encoder = read_spec(f, path);
    ck.config.decoder = read_spec(f, path);
    ck.config.discriminator = read_spec(f, path);
    ck.config.dropout_rate = read_pod<double>(f, path);
    ck.config.disc_mode = read_pod<std::uint8_t>(f, path) ? DiscMode::probabilistic
                                                          : DiscMode::critic;
    ck.config.de_term_z = read_pod<std::uint8_t>(f, path) ? DeTermZ::prior : DeTermZ::posterior;
    ck.config.literal_adv_sign = read_pod<std::uint8_t>(f, path) != 0;
    ck.config.disc_clip = read_pod<double>(f, path);

    ck.params.theta_e.values = read_doubles(f, path);
    ck.params.theta_g.values = read_doubles(f, path);
    ck.params.theta_d.values = read_doubles(f, path);
    ck.opt_eg = read_opt(f, path);
    ck.opt_d = read_opt(f, path);
    ck.seed = read_pod<std::uint64_t>(f, path);
    ck.step = read_pod<std::uint64_t>(f, path);

    ck.config.validate();
    if (ck.params.theta_e.size() != ck.config.encoder.param_count() ||
        ck.params.theta_g.size() != ck.config.decoder.param_count() ||
        ck.params.theta_d.size() != ck.config.discriminator.param_count())
        throw DataError("checkpoint parameter blocks do not match its config: " + path);
    return ck;
}

}  // namespace metazsl
