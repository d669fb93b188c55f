#include "timme/param_store.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace timme {

namespace {
constexpr char kMagic[4] = {'T', 'M', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
}  // namespace

void ParameterStore::add(const std::string& name, Matrix value, bool trainable) {
    if (slots_.count(name)) throw std::invalid_argument("ParameterStore: duplicate slot '" + name + "'");
    slots_.emplace(name, Slot{std::move(value), trainable});
}

const Matrix& ParameterStore::value(const std::string& name) const {
    auto it = slots_.find(name);
    if (it == slots_.end()) throw std::out_of_range("ParameterStore: no slot '" + name + "'");
    return it->second.value;
}

Matrix& ParameterStore::value(const std::string& name) {
    return const_cast<Matrix&>(static_cast<const ParameterStore*>(this)->value(name));
}

bool ParameterStore::trainable(const std::string& name) const {
    auto it = slots_.find(name);
    if (it == slots_.end()) throw std::out_of_range("ParameterStore: no slot '" + name + "'");
    return it->second.trainable;
}

Var ParameterStore::use(Tape& t, const std::string& name) const {
    auto it = slots_.find(name);
    if (it == slots_.end()) throw std::out_of_range("ParameterStore: no slot '" + name + "'");
    if (it->second.trainable) return t.leaf(it->second.value, name);
    return t.constant(it->second.value);
}

std::vector<std::string> ParameterStore::names() const {
    std::vector<std::string> out;
    out.reserve(slots_.size());
    for (const auto& [name, slot] : slots_) out.push_back(name);
    return out;
}

std::vector<std::string> ParameterStore::trainable_names() const {
    std::vector<std::string> out;
    for (const auto& [name, slot] : slots_)
        if (slot.trainable) out.push_back(name);
    return out;
}

void ParameterStore::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
    os.write(kMagic, 4);
    write_u32(os, kVersion);
    write_u64(os, slots_.size());
    for (const auto& [name, slot] : slots_) {
        write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u64(os, static_cast<std::uint64_t>(slot.value.rows()));
        write_u64(os, static_cast<std::uint64_t>(slot.value.cols()));
        for (Eigen::Index i = 0; i < slot.value.rows(); ++i)
            for (Eigen::Index j = 0; j < slot.value.cols(); ++j) {
                double d = slot.value(i, j);
                os.write(reinterpret_cast<const char*>(&d), 8);
            }
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

void ParameterStore::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in '" + path + "'");
    std::uint32_t version = read_u32(is);
    if (version != kVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    std::uint64_t count = read_u64(is);
    std::size_t seen = 0;
    for (std::uint64_t k = 0; k < count; ++k) {
        std::uint32_t len = read_u32(is);
        std::string name(len, '\0');
        is.read(name.data(), len);
        std::uint64_t rows = read_u64(is), cols = read_u64(is);
        if (!is) throw std::runtime_error("checkpoint: truncated record in '" + path + "'");
        auto it = slots_.find(name);
        if (it == slots_.end())
            throw std::runtime_error("checkpoint: parameter '" + name + "' does not exist in this model");
        Matrix& m = it->second.value;
        if (static_cast<std::uint64_t>(m.rows()) != rows || static_cast<std::uint64_t>(m.cols()) != cols)
            throw std::runtime_error("checkpoint: shape mismatch for '" + name + "' (file " +
                                     std::to_string(rows) + "x" + std::to_string(cols) + ", model " +
                                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")");
        for (std::uint64_t i = 0; i < rows; ++i)
            for (std::uint64_t j = 0; j < cols; ++j) {
                double d = 0.0;
                is.read(reinterpret_cast<char*>(&d), 8);
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
            }
        ++seen;
    }
    if (seen != slots_.size())
        throw std::runtime_error("checkpoint: '" + path + "' holds " + std::to_string(seen) +
                                 " parameters, model expects " + std::to_string(slots_.size()));
}

void adam_step(ParameterStore& params, const GradientMap& grads, AdamState& state, double lr) {
    const AdamConfig& c = state.cfg_;
    state.step_ += 1;
    const double t = static_cast<double>(state.step_);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);
    for (const auto& [name, g] : grads) {
        Matrix& p = params.value(name);
        if (p.rows() != g.rows() || p.cols() != g.cols())
            throw std::invalid_argument("adam_step: gradient shape disagrees for '" + name + "'");
        auto [it, inserted] = state.moments_.try_emplace(
            name, std::make_pair(Matrix::Zero(p.rows(), p.cols()), Matrix::Zero(p.rows(), p.cols())));
        Matrix& m = it->second.first;
        Matrix& v = it->second.second;
        m = c.beta1 * m + (1.0 - c.beta1) * g;
        v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
        Matrix m_hat = m / bc1;
        Matrix v_hat = v / bc2;
        p -= lr * m_hat.cwiseQuotient(v_hat.cwiseSqrt() + Matrix::Constant(p.rows(), p.cols(), c.epsilon));
    }
}

double lr_schedule(int epoch, double base, double factor, const std::vector<int>& milestones) {
    int hits = 0;
    for (int m : milestones)
        if (m <= epoch) ++hits;
    return base * std::pow(factor, hits);
}

FiniteDiffReport finite_difference_check(
    const std::function<double(ParameterStore&)>& forward,
    const std::function<GradientMap(ParameterStore&)>& gradient,
    ParameterStore& params, double epsilon, double tolerance,
    std::size_t num_coords, std::uint64_t seed) {
    GradientMap grads = gradient(params);

    // Flat index space over all trainable coordinates.
    std::vector<std::pair<std::string, std::int64_t>> slots;  // name, coord count
    std::int64_t total = 0;
    for (const std::string& name : params.trainable_names()) {
        if (!grads.has(name)) continue;
        std::int64_t n = params.value(name).size();
        slots.emplace_back(name, n);
        total += n;
    }

    FiniteDiffReport rep;
    if (total == 0) return rep;

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::int64_t> pick(0, total - 1);
    for (std::size_t k = 0; k < num_coords; ++k) {
        std::int64_t flat = pick(rng);
        std::string name;
        for (const auto& [n, cnt] : slots) {
            if (flat < cnt) {
                name = n;
                break;
            }
            flat -= cnt;
        }
        Matrix& p = params.value(name);
        Eigen::Index r = static_cast<Eigen::Index>(flat / p.cols());
        Eigen::Index cidx = static_cast<Eigen::Index>(flat % p.cols());

        double orig = p(r, cidx);
        p(r, cidx) = orig + epsilon;
        double f_plus = forward(params);
        p(r, cidx) = orig - epsilon;
        double f_minus = forward(params);
        p(r, cidx) = orig;

        double fd = (f_plus - f_minus) / (2.0 * epsilon);
        double ad = grads.at(name)(r, cidx);
        double denom = std::max({std::abs(fd), std::abs(ad), 1e-4});
        double rel = std::abs(fd - ad) / denom;
        if (rel > rep.max_rel_error) {
            rep.max_rel_error = rel;
            rep.worst_slot = name;
        }
        ++rep.coords_checked;
    }
    rep.pass = rep.max_rel_error <= tolerance;
    return rep;
}

Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
    return m;
}

Matrix uniform_rows_init(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    double limit = 1.0 / std::sqrt(static_cast<double>(cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
    return m;
}

}  // namespace timme
