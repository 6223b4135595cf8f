#include "mlpforest/serialize.hpp"

#include "mlpforest/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

namespace mlpforest {

namespace {

constexpr char kMagic[8] = {'M', 'L', 'P', 'F', 'O', 'R', 'S', 'T'};

static_assert(std::numeric_limits<double>::is_iec559, "IEEE-754 doubles required");

template <typename T>
void write_le(std::ostream& out, T value) {
    static_assert(std::is_integral_v<T>);
    if constexpr (std::endian::native == std::endian::big) {
        auto* bytes = reinterpret_cast<unsigned char*>(&value);
        std::reverse(bytes, bytes + sizeof(T));
    }
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw IoError("model file is truncated");
    if constexpr (std::endian::native == std::endian::big) {
        auto* bytes = reinterpret_cast<unsigned char*>(&value);
        std::reverse(bytes, bytes + sizeof(T));
    }
    return value;
}

void write_double(std::ostream& out, double value) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    write_le(out, bits);
}

double read_double(std::istream& in) {
    const std::uint64_t bits = read_le<std::uint64_t>(in);
    double value;
    std::memcpy(&value, &bits, sizeof(value));
    return value;
}

void write_string(std::ostream& out, const std::string& s) {
    write_le(out, static_cast<std::uint64_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
    const std::uint64_t len = read_le<std::uint64_t>(in);
    if (len > (1ULL << 20)) throw IoError("model file: implausible string length");
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (!in) throw IoError("model file is truncated");
    return s;
}

void write_doubles(std::ostream& out, const double* values, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) write_double(out, values[i]);
}

void read_doubles(std::istream& in, double* values, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) values[i] = read_double(in);
}

void write_mlp(std::ostream& out, const MlpModel& m) {
    write_le(out, static_cast<std::uint64_t>(m.input_dim()));
    write_le(out, static_cast<std::uint64_t>(m.hidden_size()));
    write_le(out, static_cast<std::uint64_t>(m.class_count()));
    write_doubles(out, m.w1.data(), m.w1.size());
    write_doubles(out, m.b1.data(), m.b1.size());
    write_doubles(out, m.w2.data(), m.w2.size());
    write_doubles(out, m.b2.data(), m.b2.size());
}

MlpModel read_mlp(std::istream& in) {
    const auto d = static_cast<std::size_t>(read_le<std::uint64_t>(in));
    const auto h = static_cast<std::size_t>(read_le<std::uint64_t>(in));
    const auto c = static_cast<std::size_t>(read_le<std::uint64_t>(in));
    if (d == 0 || h == 0 || c < 2 || d > (1ULL << 24) || h > (1ULL << 24) || c > (1ULL << 24)) {
        throw IoError("model file: implausible member shape");
    }
    MlpModel m;
    m.w1 = Matrix(d, h);
    m.b1.resize(h);
    m.w2 = Matrix(h, c);
    m.b2.resize(c);
    read_doubles(in, m.w1.data(), m.w1.size());
    read_doubles(in, m.b1.data(), m.b1.size());
    read_doubles(in, m.w2.data(), m.w2.size());
    read_doubles(in, m.b2.data(), m.b2.size());
    return m;
}

} // namespace

void save_model(const ModelFile& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("save_model: cannot open '" + path + "' for writing");

    const std::size_t n = model.forest.feature_count();
    out.write(kMagic, sizeof(kMagic));
    write_le(out, kModelFileVersion);
    write_le(out, static_cast<std::uint64_t>(n));
    write_le(out, static_cast<std::uint64_t>(model.forest.class_count));
    write_string(out, model.label_column);
    for (const auto& s : model.feature_names) write_string(out, s);
    for (const auto& s : model.class_names) write_string(out, s);
    write_doubles(out, model.standardizer.means.data(), model.standardizer.means.size());
    write_doubles(out, model.standardizer.stddevs.data(), model.standardizer.stddevs.size());

    write_le(out, static_cast<std::uint8_t>(model.forest.whitening ? 1 : 0));
    if (model.forest.whitening) {
        const WhiteningTransform& t = *model.forest.whitening;
        write_doubles(out, t.means.data(), t.means.size());
        write_doubles(out, t.eigenvalues.data(), t.eigenvalues.size());
        write_doubles(out, t.eigenvectors.data(), t.eigenvectors.size());
        write_double(out, t.eigenvalue_floor);
    }
    write_doubles(out, model.forest.priors_equiprobable.data(),
                  model.forest.priors_equiprobable.size());
    write_le(out, static_cast<std::uint8_t>(model.forest.priors_weighted.empty() ? 0 : 1));
    if (!model.forest.priors_weighted.empty()) {
        write_doubles(out, model.forest.priors_weighted.data(),
                      model.forest.priors_weighted.size());
    }
    write_le(out, static_cast<std::uint64_t>(model.forest.members.size()));
    for (const MlpModel& m : model.forest.members) write_mlp(out, m);
    out.flush();
    if (!out) throw IoError("save_model: write to '" + path + "' failed");
}

ModelFile load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_model: cannot open '" + path + "'");

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError("load_model: '" + path + "' is not a model file");
    }
    const std::uint32_t version = read_le<std::uint32_t>(in);
    if (version != kModelFileVersion) {
        throw IoError("load_model: unsupported model file version " +
                      std::to_string(version) + " (expected " +
                      std::to_string(kModelFileVersion) + ")");
    }
    const auto n = static_cast<std::size_t>(read_le<std::uint64_t>(in));
    const auto classes = static_cast<std::size_t>(read_le<std::uint64_t>(in));
    if (n == 0 || n > (1ULL << 24) || classes < 2 || classes > (1ULL << 24)) {
        throw IoError("load_model: implausible model dimensions");
    }

    ModelFile model;
    model.forest.class_count = classes;
    model.label_column = read_string(in);
    model.feature_names.resize(n);
    for (auto& s : model.feature_names) s = read_string(in);
    model.class_names.resize(classes);
    for (auto& s : model.class_names) s = read_string(in);
    model.standardizer.means.resize(n);
    model.standardizer.stddevs.resize(n);
    read_doubles(in, model.standardizer.means.data(), n);
    read_doubles(in, model.standardizer.stddevs.data(), n);

    if (read_le<std::uint8_t>(in) != 0) {
        WhiteningTransform t;
        t.means.resize(n);
        t.eigenvalues.resize(n);
        t.eigenvectors = Matrix(n, n);
        read_doubles(in, t.means.data(), n);
        read_doubles(in, t.eigenvalues.data(), n);
        read_doubles(in, t.eigenvectors.data(), t.eigenvectors.size());
        t.eigenvalue_floor = read_double(in);
        model.forest.whitening = std::move(t);
    }
    model.forest.priors_equiprobable.resize(n);
    read_doubles(in, model.forest.priors_equiprobable.data(), n);
    if (read_le<std::uint8_t>(in) != 0) {
        model.forest.priors_weighted.resize(n);
        read_doubles(in, model.forest.priors_weighted.data(), n);
    }
    const auto member_count = static_cast<std::size_t>(read_le<std::uint64_t>(in));
    if (member_count != n) {
        throw IoError("load_model: member count " + std::to_string(member_count) +
                      " does not match feature count " + std::to_string(n));
    }
    model.forest.subsets = generate_subsets(n);
    model.forest.members.reserve(member_count);
    for (std::size_t j = 0; j < member_count; ++j) {
        model.forest.members.push_back(read_mlp(in));
        if (model.forest.members.back().input_dim() != n - 1) {
            throw IoError("load_model: member " + std::to_string(j) +
                          " input dimension does not match feature count");
        }
    }
    return model;
}

} // namespace mlpforest
