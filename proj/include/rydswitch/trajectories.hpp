#pragma once

#include "rydswitch/channels.hpp"
#include "rydswitch/dynamics.hpp"
#include "rydswitch/propagator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace rydswitch::trajectories {

enum class EventKind { readout, spontaneous, cavity_or_field_loss, atomic_decay };

const char* to_string(EventKind kind);
bool is_terminating(EventKind kind);

struct Event {
    double t = 0.0;
    EventKind kind = EventKind::readout;
    int atom = -1; // emitting atom for spontaneous events
};

enum class Outcome { stored_then_lost, never_stored };

const char* to_string(Outcome outcome);

struct TrajectoryRecord {
    std::vector<Event> events;
    int n_readout = 0;
    Outcome outcome = Outcome::never_stored;
    std::uint64_t seed = 0;
    bool converted = false;  // counted by the IM estimator
    bool terminated = false; // ended in a terminating jump
    double t_end = 0.0;
    double max_rydberg_fraction = 0.0; // conditional, before the first jump
};

// pulse_end: stop at the end of the input pulse (IM only).
// threshold: stop as soon as n_readout reaches n_th.
enum class StopMode { full, pulse_end, threshold };

const char* to_string(StopMode mode);

struct EngineOptions {
    double t_max = 0.0; // observation window after the pulse end
    StopMode stop = StopMode::full;
    int n_th = 3;
    int grid_per_tau = 64;
};

// Conditional populations of the extended state (vacuum, incoming pulse,
// cavity, excited, Rydberg); they sum to 1.
struct Populations {
    double vacuum = 0.0;
    double source = 0.0;
    double cavity = 0.0;
    double excited = 0.0;
    double rydberg = 0.0;
};

// Monte-Carlo wavefunction engine for one parameter point. The jump-free
// evolution under the full pulse is shared by every trajectory and computed
// once on construction.
class TrajectoryEngine {
  public:
    TrajectoryEngine(dynamics::Generator g, channels::JumpChannelSet ch, EngineOptions opt);

    TrajectoryRecord run(std::uint64_t seed) const;
    // Also reports the conditional populations at the (sorted) sample times.
    TrajectoryRecord run(std::uint64_t seed, const std::vector<double>& sample_times,
                         std::vector<Populations>& samples) const;

    const dynamics::Generator& generator() const { return gen_; }
    const channels::JumpChannelSet& channels() const { return ch_; }
    const EngineOptions& options() const { return opt_; }
    double horizon() const { return horizon_; }
    double grid_step() const { return grid_.step(); }

    // Jump-free path (unnormalised), exposed for diagnostics and tests.
    int node_count() const { return static_cast<int>(node_norm_.size()); }
    double node_time(int i) const { return i * grid_.step(); }
    double node_norm(int i) const { return node_norm_[static_cast<std::size_t>(i)]; }
    const Eigen::VectorXcd& node_state(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    // Storage probability of the jump-free (unnormalised) driven path.
    propagator::GridStorage deterministic_storage() const;
    // Conditional Rydberg fraction at the pulse end in the absence of jumps.
    double rydberg_fraction_at_pulse_end() const;

  private:
    Populations populations(const Eigen::VectorXcd& psi, double t, double w) const;
    Eigen::VectorXcd evolve(const Eigen::VectorXcd& psi, double t, double dt, double w) const;
    double norm2(const Eigen::VectorXcd& psi, double t, double w) const;
    double rydberg_fraction(const Eigen::VectorXcd& psi, double t, double w) const;
    void locate(Eigen::VectorXcd psi, double t, double len, double w, double u, double& t_jump,
                Eigen::VectorXcd& psi_jump) const;

    dynamics::Generator gen_;
    channels::JumpChannelSet ch_;
    EngineOptions opt_;
    dynamics::IntegratorOptions iopt_;
    propagator::GridPropagator grid_;
    double horizon_ = 0.0;
    int pulse_end_node_ = 0;
    int last_node_ = 0;
    std::vector<Eigen::VectorXcd> nodes_;
    std::vector<double> node_norm_;
    std::vector<double> node_rfrac_max_; // running max of the conditional Rydberg fraction
};

// r_k <- c_{j,k} r_k, every other amplitude zeroed, renormalised.
Eigen::VectorXcd apply_jump(const dynamics::Layout& layout, const Eigen::VectorXcd& psi,
                            const channels::JumpChannelSet& ch, int channel);

Outcome classify_outcome(const TrajectoryRecord& record);

struct RunStats {
    int n_traj = 0;
    int n_th = 3;
    double im_probability = 0.0;
    double im_stderr = 0.0;
    double efficiency = 0.0;
    double efficiency_stderr = 0.0;
    double mean_readout = 0.0;
    double mean_readout_stderr = 0.0;
    double stored_fraction = 0.0;
    std::vector<long> histogram; // index = n_readout
    bool histogram_censored = false; // last bin holds n_readout >= n_th
};

RunStats summarize(const std::vector<TrajectoryRecord>& records, int n_th, bool censored);

// Mixes (base_seed, index) into an independent 64-bit trajectory seed.
std::uint64_t trajectory_seed(std::uint64_t base_seed, std::uint64_t index);

struct BatchOptions {
    int n_traj = 1;
    std::uint64_t base_seed = 0;
    int threads = 1;
    bool keep_records = false;
};

struct BatchResult {
    RunStats stats;
    std::vector<TrajectoryRecord> records;
};

BatchResult batch_run(const TrajectoryEngine& engine, const BatchOptions& opt);

// traj_id,t,kind,l
void write_events_csv(std::ostream& os, const std::vector<TrajectoryRecord>& records);

} // namespace rydswitch::trajectories
