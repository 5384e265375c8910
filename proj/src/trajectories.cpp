#include "rydswitch/trajectories.hpp"
#include "rydswitch/errors.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <utility>

namespace rydswitch::trajectories {

namespace {

constexpr double rydberg_majority = 0.5;

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::string fmt_double(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

} // namespace

const char* to_string(EventKind kind) {
    switch (kind) {
    case EventKind::readout:
        return "readout";
    case EventKind::spontaneous:
        return "spontaneous";
    case EventKind::cavity_or_field_loss:
        return "cavity_or_field_loss";
    case EventKind::atomic_decay:
        return "atomic_decay";
    }
    return "unknown";
}

bool is_terminating(EventKind kind) {
    return kind == EventKind::cavity_or_field_loss || kind == EventKind::atomic_decay;
}

const char* to_string(Outcome outcome) {
    return outcome == Outcome::stored_then_lost ? "stored_then_lost" : "never_stored";
}

const char* to_string(StopMode mode) {
    switch (mode) {
    case StopMode::full:
        return "full";
    case StopMode::pulse_end:
        return "pulse_end";
    case StopMode::threshold:
        return "threshold";
    }
    return "unknown";
}

std::uint64_t trajectory_seed(std::uint64_t base_seed, std::uint64_t index) {
    return splitmix64(splitmix64(base_seed) ^ (index * 0xD1B54A32D192ED03ULL + 1));
}

Eigen::VectorXcd apply_jump(const dynamics::Layout& layout, const Eigen::VectorXcd& psi,
                            const channels::JumpChannelSet& ch, int channel) {
    if (channel < 0 || channel >= ch.size())
        throw ConfigError("apply_jump: channel index out of range");
    if (ch.n_atoms() != layout.n_atoms || psi.size() != layout.dim())
        throw ConfigError("apply_jump: state and channel set disagree in size");
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(psi.size());
    const int ro = layout.r_offset();
    for (int k = 0; k < layout.n_atoms; ++k)
        out(ro + k) = ch.coeffs(channel, k) * psi(ro + k);
    const double norm = out.norm();
    if (!(norm > 0.0) || !std::isfinite(norm))
        throw ImpossibleJumpError("apply_jump: jump annihilates the state");
    return out / norm;
}

Outcome classify_outcome(const TrajectoryRecord& record) {
    for (const Event& e : record.events)
        if (!is_terminating(e.kind))
            return Outcome::stored_then_lost;
    return record.max_rydberg_fraction > rydberg_majority ? Outcome::stored_then_lost
                                                          : Outcome::never_stored;
}

// ---------------------------------------------------------------------------

TrajectoryEngine::TrajectoryEngine(dynamics::Generator g, channels::JumpChannelSet ch,
                                   EngineOptions opt)
    : gen_(std::move(g)), ch_(std::move(ch)), opt_(opt) {
    const int n = gen_.layout.n_atoms;
    if (ch_.n_atoms() != n || ch_.gamma_r.size() != n)
        throw ConfigError("TrajectoryEngine: channel set does not match the generator");
    const double scale = 1.0 + gen_.gamma_r.cwiseAbs().maxCoeff();
    if ((gen_.gamma_r - ch_.gamma_r).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw ConfigError("TrajectoryEngine: generator dephasing differs from the channel set");
    if (opt_.stop != StopMode::pulse_end && !(opt_.t_max > 0.0))
        throw ConfigError("TrajectoryEngine: t_max must be positive");
    if (opt_.n_th < 1)
        throw ConfigError("TrajectoryEngine: n_th must be >= 1");
    if (opt_.grid_per_tau < 4)
        throw ConfigError("TrajectoryEngine: grid_per_tau must be >= 4");

    iopt_ = dynamics::default_integrator_options(gen_);
    const double t_pe = gen_.pulse.end();
    const double t_off = gen_.pulse.drive_off();
    int n_pe = 0;
    const double h = propagator::pulse_grid_step(gen_.pulse, opt_.grid_per_tau, n_pe);
    const int n_off = static_cast<int>(std::ceil(t_off / h));
    grid_ = propagator::GridPropagator(gen_, h, 8);
    pulse_end_node_ = n_pe;

    horizon_ = opt_.stop == StopMode::pulse_end ? t_pe : t_pe + opt_.t_max;
    last_node_ = n_off;
    if (horizon_ < n_off * h) {
        // horizon inside the drive window: snap it to the grid
        last_node_ = std::max(n_pe, static_cast<int>(std::floor(horizon_ / h + 1e-9)));
        horizon_ = last_node_ * h;
    }

    nodes_.resize(static_cast<std::size_t>(last_node_ + 1));
    node_norm_.resize(nodes_.size());
    node_rfrac_max_.resize(nodes_.size());
    nodes_[0] = Eigen::VectorXcd::Zero(gen_.dim());
    node_norm_[0] = 1.0;
    node_rfrac_max_[0] = 0.0;
    for (int i = 0; i < last_node_; ++i) {
        auto& next = nodes_[static_cast<std::size_t>(i + 1)];
        grid_.driven_step(nodes_[static_cast<std::size_t>(i)], i * h, 1.0, next);
        const double t = (i + 1) * h;
        node_norm_[static_cast<std::size_t>(i + 1)] = norm2(next, t, 1.0);
        node_rfrac_max_[static_cast<std::size_t>(i + 1)] =
            std::max(node_rfrac_max_[static_cast<std::size_t>(i)], rydberg_fraction(next, t, 1.0));
    }
}

propagator::GridStorage TrajectoryEngine::deterministic_storage() const {
    return propagator::storage_from_nodes(gen_, nodes_, grid_.step(), pulse_end_node_);
}

double TrajectoryEngine::rydberg_fraction_at_pulse_end() const {
    const auto i = static_cast<std::size_t>(pulse_end_node_);
    return rydberg_fraction(nodes_[i], pulse_end_node_ * grid_.step(), 1.0);
}

double TrajectoryEngine::norm2(const Eigen::VectorXcd& psi, double t, double w) const {
    return psi.squaredNorm() + (w != 0.0 ? w * w * gen_.pulse.remaining(t) : 0.0);
}

double TrajectoryEngine::rydberg_fraction(const Eigen::VectorXcd& psi, double t,
                                          double w) const {
    const double n = norm2(psi, t, w);
    return n > 0.0 ? gen_.rydberg_population(psi) / n : 0.0;
}

Populations TrajectoryEngine::populations(const Eigen::VectorXcd& psi, double t,
                                          double w) const {
    Populations p;
    const double n = norm2(psi, t, w);
    if (!(n > 0.0)) {
        p.vacuum = 1.0;
        return p;
    }
    p.source = w != 0.0 ? w * w * gen_.pulse.remaining(t) / n : 0.0;
    p.cavity = gen_.cavity_population(psi) / n;
    p.excited = gen_.excited_population(psi) / n;
    p.rydberg = gen_.rydberg_population(psi) / n;
    return p;
}

Eigen::VectorXcd TrajectoryEngine::evolve(const Eigen::VectorXcd& psi, double t, double dt,
                                          double w) const {
    dynamics::ControlState s{psi, t, w};
    if (dt <= 0.0)
        return psi;
    return dynamics::propagate_nojump(gen_, s, dt, iopt_).psi;
}

void TrajectoryEngine::locate(Eigen::VectorXcd psi, double t, double len, double w, double u,
                              double& t_jump, Eigen::VectorXcd& psi_jump) const {
    const double t_off = gen_.pulse.drive_off();
    auto rhs = [&](double tt, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) {
        gen_.apply(y, dy);
        if (w != 0.0 && tt < t_off)
            dy += (w * gen_.pulse.amplitude(tt)) * gen_.drive;
    };
    auto crossing = [&](double tt, const Eigen::VectorXcd& y) { return norm2(y, tt, w) - u; };
    double step = 0.0;
    dynamics::integrate_until(rhs, crossing, t, t + len, psi, t_jump, iopt_, step);
    psi_jump = std::move(psi);
}

TrajectoryRecord TrajectoryEngine::run(std::uint64_t seed) const {
    std::vector<Populations> none;
    return run(seed, {}, none);
}

TrajectoryRecord TrajectoryEngine::run(std::uint64_t seed, const std::vector<double>& times,
                                       std::vector<Populations>& samples) const {
    TrajectoryRecord rec;
    rec.seed = seed;
    std::mt19937_64 rng(seed);
    auto uniform = [&rng] { return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53; };

    const double h = grid_.step();
    const double t_pe = gen_.pulse.end();
    const double t_off = gen_.pulse.drive_off();
    const int dim = gen_.dim();

    samples.assign(times.size(), Populations{});
    std::size_t si = 0;
    auto fill_from_nodes = [&](double t_limit) {
        for (; si < times.size() && times[si] < t_limit; ++si) {
            const double ts = times[si];
            const int i = std::clamp(static_cast<int>(std::floor(ts / h)), 0, last_node_);
            Eigen::VectorXcd p = evolve(nodes_[static_cast<std::size_t>(i)], i * h, ts - i * h, 1.0);
            samples[si] = populations(p, ts, 1.0);
        }
    };
    // from a segment start, with the no-jump evolution
    auto fill_from_segment = [&](const Eigen::VectorXcd& start, double t_start, double w,
                                 double t_limit) {
        Eigen::VectorXcd p = start;
        double tp = t_start;
        for (; si < times.size() && times[si] < t_limit; ++si) {
            const double ts = std::max(times[si], t_start);
            p = evolve(p, tp, ts - tp, w);
            tp = ts;
            samples[si] = populations(p, ts, w);
        }
    };
    auto fill_constant = [&](const Populations& pop) {
        for (; si < times.size(); ++si)
            samples[si] = pop;
    };

    double u = uniform();
    double t = 0.0;
    double w = 1.0;
    Eigen::VectorXcd psi;
    bool jump_pending = false;
    bool any_jump = false;
    double max_rfrac = 0.0;

    // first jump on the shared driven path
    int hit = -1;
    for (int i = 1; i <= last_node_; ++i) {
        if (node_norm_[static_cast<std::size_t>(i)] <= u) {
            hit = i;
            break;
        }
    }
    if (hit > 0) {
        const auto prev = static_cast<std::size_t>(hit - 1);
        locate(nodes_[prev], (hit - 1) * h, h, 1.0, u, t, psi);
        fill_from_nodes(t);
        max_rfrac = std::max(node_rfrac_max_[prev], rydberg_fraction(psi, t, 1.0));
        jump_pending = true;
    } else {
        t = last_node_ * h;
        psi = nodes_[static_cast<std::size_t>(last_node_)];
        fill_from_nodes(t);
        max_rfrac = node_rfrac_max_[static_cast<std::size_t>(last_node_)];
    }

    const int cf = grid_.coarse_factor();
    const double hc = grid_.coarse_step();
    const double hs = grid_.super_step();
    Eigen::VectorXcd next(dim);

    // Free evolution from (psi, t) until the norm reaches u or the horizon.
    auto march = [&](double& t_jump, Eigen::VectorXcd& psi_jump) -> bool {
        double super_fail = t;
        auto track = [&] {
            if (!any_jump)
                max_rfrac = std::max(max_rfrac, rydberg_fraction(psi, t, w));
        };
        while (true) {
            const double remaining = horizon_ - t;
            if (remaining <= 1e-12 * (1.0 + horizon_))
                return false;
            // the running maximum is only tracked before the first jump
            if (any_jump && remaining >= hs && t >= super_fail) {
                grid_.super(psi, next);
                if (norm2(next, t + hs, w) > u) {
                    psi.swap(next);
                    t += hs;
                    continue;
                }
                super_fail = t + hs;
            }
            if (remaining >= hc) {
                grid_.coarse(psi, next);
                if (norm2(next, t + hc, w) > u) {
                    psi.swap(next);
                    t += hc;
                    track();
                    continue;
                }
                for (int k = 0; k < cf; ++k) {
                    grid_.free_step(psi, next);
                    if (norm2(next, t + h, w) <= u || k == cf - 1) {
                        locate(psi, t, h, w, u, t_jump, psi_jump);
                        return true;
                    }
                    psi.swap(next);
                    t += h;
                    track();
                }
            } else if (remaining >= h) {
                grid_.free_step(psi, next);
                if (norm2(next, t + h, w) <= u) {
                    locate(psi, t, h, w, u, t_jump, psi_jump);
                    return true;
                }
                psi.swap(next);
                t += h;
                track();
            } else {
                Eigen::VectorXcd end = evolve(psi, t, remaining, w);
                if (norm2(end, horizon_, w) <= u) {
                    locate(psi, t, remaining, w, u, t_jump, psi_jump);
                    return true;
                }
                psi = std::move(end);
                t = horizon_;
                track();
                return false;
            }
        }
    };

    while (true) {
        if (!jump_pending) {
            const Eigen::VectorXcd seg_start = psi;
            const double seg_t = t;
            double t_jump = 0.0;
            Eigen::VectorXcd psi_jump;
            const bool crossed = march(t_jump, psi_jump);
            if (!crossed) {
                if (!times.empty()) {
                    fill_from_segment(seg_start, seg_t, w, horizon_);
                    fill_constant(populations(psi, t, w));
                }
                break;
            }
            if (!times.empty())
                fill_from_segment(seg_start, seg_t, w, t_jump);
            t = t_jump;
            psi = std::move(psi_jump);
            if (!any_jump)
                max_rfrac = std::max(max_rfrac, rydberg_fraction(psi, t, w));
        }
        jump_pending = false;

        // channel selection
        const double f = (w != 0.0 && t < t_off) ? w * gen_.pulse.amplitude(t) : 0.0;
        const int ro = gen_.layout.r_offset();
        const int n = gen_.layout.n_atoms;
        Eigen::VectorXd rates(2 + ch_.size());
        rates(0) = std::norm(gen_.output_amplitude(psi, f));
        rates(1) = gen_.atomic_loss_rate(psi);
        Eigen::VectorXd r2(n);
        for (int k = 0; k < n; ++k)
            r2(k) = std::norm(psi(ro + k));
        for (int j = 0; j < ch_.size(); ++j)
            rates(2 + j) = ch_.coeffs.row(j).cwiseAbs2().dot(r2.transpose());
        const double total = rates.sum();
        if (!(total > 0.0) || !std::isfinite(total))
            throw ImpossibleJumpError("run_trajectory: no channel can fire at t = " +
                                      fmt_double(t));
        const double pick = uniform() * total;
        double acc = 0.0;
        int chosen = static_cast<int>(rates.size()) - 1;
        for (int j = 0; j < rates.size(); ++j) {
            acc += rates(j);
            if (pick <= acc && rates(j) > 0.0) {
                chosen = j;
                break;
            }
        }
        while (rates(chosen) <= 0.0 && chosen > 0)
            --chosen;

        Event ev;
        ev.t = t;
        if (chosen == 0) {
            ev.kind = EventKind::cavity_or_field_loss;
        } else if (chosen == 1) {
            ev.kind = EventKind::atomic_decay;
        } else {
            const auto row = static_cast<std::size_t>(chosen - 2);
            ev.kind = ch_.kinds[row] == channels::ChannelKind::readout ? EventKind::readout
                                                                       : EventKind::spontaneous;
            ev.atom = ch_.atoms[row];
        }
        if (!rec.events.empty() && !(ev.t > rec.events.back().t))
            ev.t = std::nextafter(rec.events.back().t, std::numeric_limits<double>::infinity());
        rec.events.push_back(ev);

        if (is_terminating(ev.kind)) {
            rec.terminated = true;
            Populations vac;
            vac.vacuum = 1.0;
            fill_constant(vac);
            break;
        }
        psi = apply_jump(gen_.layout, psi, ch_, chosen - 2);
        w = 0.0;
        any_jump = true;
        if (ev.kind == EventKind::readout)
            ++rec.n_readout;
        if (opt_.stop == StopMode::pulse_end) {
            // the IM estimator is fixed by the first event
            fill_constant(populations(psi, t, 0.0));
            break;
        }
        if (opt_.stop == StopMode::threshold && rec.n_readout >= opt_.n_th) {
            if (!times.empty()) {
                fill_from_segment(psi, t, 0.0, horizon_);
                fill_constant(populations(psi, t, 0.0));
            }
            break;
        }
        u = uniform();
    }

    rec.t_end = t;
    rec.max_rydberg_fraction = max_rfrac;
    if (!rec.events.empty() && rec.events.front().t <= t_pe)
        rec.converted = !is_terminating(rec.events.front().kind);
    else
        rec.converted = rydberg_fraction_at_pulse_end() > rydberg_majority;
    rec.outcome = classify_outcome(rec);
    return rec;
}

// ---------------------------------------------------------------------------

RunStats summarize(const std::vector<TrajectoryRecord>& records, int n_th, bool censored) {
    RunStats s;
    s.n_traj = static_cast<int>(records.size());
    s.n_th = n_th;
    s.histogram_censored = censored;
    if (records.empty())
        return s;
    const double n = static_cast<double>(records.size());
    long converted = 0, efficient = 0, stored = 0;
    double sum = 0.0, sum2 = 0.0;
    int max_count = 0;
    for (const auto& r : records) {
        converted += r.converted ? 1 : 0;
        efficient += r.n_readout >= n_th ? 1 : 0;
        stored += r.outcome == Outcome::stored_then_lost ? 1 : 0;
        sum += r.n_readout;
        sum2 += static_cast<double>(r.n_readout) * r.n_readout;
        max_count = std::max(max_count, r.n_readout);
    }
    auto binomial_se = [n](double p) { return std::sqrt(std::max(0.0, p * (1.0 - p)) / n); };
    s.im_probability = converted / n;
    s.im_stderr = binomial_se(s.im_probability);
    s.efficiency = efficient / n;
    s.efficiency_stderr = binomial_se(s.efficiency);
    s.mean_readout = sum / n;
    const double var = records.size() > 1 ? std::max(0.0, (sum2 - sum * sum / n) / (n - 1.0)) : 0.0;
    s.mean_readout_stderr = std::sqrt(var / n);
    s.stored_fraction = stored / n;
    const int bins = censored ? std::min(max_count, n_th) + 1 : max_count + 1;
    s.histogram.assign(static_cast<std::size_t>(bins), 0);
    for (const auto& r : records) {
        int b = censored ? std::min(r.n_readout, n_th) : r.n_readout;
        ++s.histogram[static_cast<std::size_t>(b)];
    }
    return s;
}

BatchResult batch_run(const TrajectoryEngine& engine, const BatchOptions& opt) {
    if (opt.n_traj < 1)
        throw ConfigError("batch_run: n_traj must be >= 1");
    const int n = opt.n_traj;
    std::vector<TrajectoryRecord> records(static_cast<std::size_t>(n));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::atomic<int> next{0};
    auto worker = [&] {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                records[static_cast<std::size_t>(i)] =
                    engine.run(trajectory_seed(opt.base_seed, static_cast<std::uint64_t>(i)));
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    const int threads = std::clamp(opt.threads, 1, n);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int k = 0; k < threads; ++k)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);

    BatchResult out;
    const bool censored = engine.options().stop == StopMode::threshold;
    out.stats = summarize(records, engine.options().n_th, censored);
    if (opt.keep_records)
        out.records = std::move(records);
    return out;
}

void write_events_csv(std::ostream& os, const std::vector<TrajectoryRecord>& records) {
    os << "traj_id,t,kind,l\n";
    for (std::size_t i = 0; i < records.size(); ++i)
        for (const Event& e : records[i].events)
            os << i << ',' << fmt_double(e.t) << ',' << to_string(e.kind) << ',' << e.atom
               << '\n';
}

} // namespace rydswitch::trajectories
