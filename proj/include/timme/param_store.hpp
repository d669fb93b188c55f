#ifndef TIMME_PARAM_STORE_HPP
#define TIMME_PARAM_STORE_HPP

#include "timme/tape.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace timme {

/// Named dense parameter slots, each trainable or frozen. Slot names are
/// unique; iteration order is lexicographic, which keeps every consumer
/// (optimizer, checkpoints, gradient checks) deterministic.
class ParameterStore {
public:
    void add(const std::string& name, Matrix value, bool trainable = true);
    bool has(const std::string& name) const { return slots_.count(name) != 0; }
    const Matrix& value(const std::string& name) const;
    Matrix& value(const std::string& name);
    bool trainable(const std::string& name) const;
    std::size_t size() const { return slots_.size(); }

    /// Records the slot on the tape: a named leaf if trainable, a constant
    /// otherwise.
    Var use(Tape& t, const std::string& name) const;

    std::vector<std::string> names() const;
    std::vector<std::string> trainable_names() const;

    /// Binary checkpoint: magic, version, then per-slot records of
    /// (name, rows, cols, little-endian float64 payload in row order).
    void save(const std::string& path) const;
    /// Overwrites existing slots from a checkpoint. Every record must match a
    /// registered slot of identical shape; slots absent from the file are an
    /// error, as are records for unknown slots.
    void load(const std::string& path);

private:
    struct Slot {
        Matrix value;
        bool trainable{true};
    };
    std::map<std::string, Slot> slots_;
};

/// Adam with bias correction; state lives outside the store so two optimizers
/// never race on one parameter set.
struct AdamConfig {
    double beta1{0.9};
    double beta2{0.999};
    double epsilon{1e-8};
};

class AdamState {
public:
    explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}
    const AdamConfig& config() const { return cfg_; }
    std::int64_t step_count() const { return step_; }

    friend void adam_step(ParameterStore& params, const GradientMap& grads, AdamState& state, double lr);

private:
    AdamConfig cfg_;
    std::int64_t step_{0};
    std::map<std::string, std::pair<Matrix, Matrix>> moments_;
};

/// One Adam update over every gradient in `grads`.
void adam_step(ParameterStore& params, const GradientMap& grads, AdamState& state, double lr);

/// Step-decay schedule: base * factor^(number of milestones <= epoch).
double lr_schedule(int epoch, double base, double factor, const std::vector<int>& milestones);

/// Central-difference gradient verification for a scalar forward function.
struct FiniteDiffReport {
    double max_rel_error{0.0};
    std::size_t coords_checked{0};
    bool pass{false};
    std::string worst_slot;
};

/// Forward function: evaluates the loss at the store's current values. Must be
/// deterministic. Samples `num_coords` coordinates uniformly across trainable
/// slots (frozen slots are never touched) and compares autodiff gradients
/// against (f(x+eps)-f(x-eps))/2eps. Relative error uses a 1e-4 floor on the
/// denominator so near-zero gradients are compared absolutely.
FiniteDiffReport finite_difference_check(
    const std::function<double(ParameterStore&)>& forward,
    const std::function<GradientMap(ParameterStore&)>& gradient,
    ParameterStore& params, double epsilon, double tolerance,
    std::size_t num_coords, std::uint64_t seed);

/// Glorot-uniform initialization, limit sqrt(6/(fan_in+fan_out)).
Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

/// Uniform in [-1/sqrt(cols), 1/sqrt(cols)], used for trainable feature rows.
Matrix uniform_rows_init(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

}  // namespace timme

#endif  // TIMME_PARAM_STORE_HPP
