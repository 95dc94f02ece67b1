#pragma once

// Dynamic train/validation re-partitioning driven by hard validation samples.
//
// Each epoch: train on Train, validate on Validation, promote the highest-loss
// hard samples into Train and send the same number of random Train samples
// back. When no hard sample remains (or the epoch cap is hit) the two sets
// are merged and training continues at a reduced learning rate.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "mammo/error.hpp"
#include "mammo/random.hpp"

namespace mammo::sched {

enum class Partition { Train, Validation };

struct SampleRecord {
    std::string sample_id;
    Partition partition = Partition::Validation;
    std::optional<double> last_loss;
    bool is_hard = false;
};

struct SchedulerConfig {
    int swap_count = 3;
    double initial_split_ratio = 0.8;
    double initial_lr = 0.01;
    double final_lr_fraction = 0.1;
    int final_epochs = 10;
    int max_epochs = 500;  // safety cap on the swap phase
    std::uint64_t seed = 0;

    void validate() const {
        if (swap_count < 1) throw ParameterError("swap_count must be >= 1");
        if (!(initial_split_ratio > 0.0 && initial_split_ratio < 1.0)) {
            throw ParameterError("initial split ratio must lie in (0,1)");
        }
        if (!(initial_lr > 0.0)) throw ParameterError("initial learning rate must be > 0");
        if (!(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0)) {
            throw ParameterError("final_lr_fraction must lie in (0,1]");
        }
        if (final_epochs < 0) throw ParameterError("final_epochs must be >= 0");
        if (max_epochs < 1) throw ParameterError("max_epochs must be >= 1");
    }

    double final_lr() const { return initial_lr * final_lr_fraction; }
};

struct SplitState {
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::uint64_t swaps_done = 0;  // feeds the per-swap seed

    bool in_train(const std::string& id) const {
        return std::find(train.begin(), train.end(), id) != train.end();
    }
    bool in_validation(const std::string& id) const {
        return std::find(validation.begin(), validation.end(), id) != validation.end();
    }
};

struct EpochEvent {
    int epoch = 0;
    bool final_phase = false;
    double lr = 0.0;
    std::size_t n_train = 0;
    std::size_t n_validation = 0;
    std::size_t n_hard = 0;
    bool operator==(const EpochEvent&) const = default;
};

struct SwapEvent {
    int epoch = 0;
    std::vector<std::string> ids_to_train;
    std::vector<std::string> ids_to_val;
    bool operator==(const SwapEvent&) const = default;
};

struct Termination {
    enum class Reason { NoHardSamples, Cap };
    int epoch = 0;
    Reason reason = Reason::NoHardSamples;
    bool operator==(const Termination&) const = default;
};

struct MergeEvent {
    int epoch = 0;
    std::size_t n_train = 0;
    bool operator==(const MergeEvent&) const = default;
};

struct PhaseChange {
    int epoch = 0;
    double new_lr = 0.0;
    bool operator==(const PhaseChange&) const = default;
};

using ScheduleEvent = std::variant<EpochEvent, SwapEvent, Termination, MergeEvent, PhaseChange>;

struct ScheduleLog {
    std::vector<ScheduleEvent> events;
    SplitState final_state;

    template <class E>
    std::vector<E> of_type() const {
        std::vector<E> out;
        for (const auto& e : events) {
            if (const auto* p = std::get_if<E>(&e)) out.push_back(*p);
        }
        return out;
    }
};

inline const char* to_string(Termination::Reason r) {
    return r == Termination::Reason::Cap ? "cap" : "no_hard_samples";
}

inline nlohmann::json to_json(const ScheduleEvent& ev) {
    return std::visit(
        [](const auto& e) -> nlohmann::json {
            using E = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<E, EpochEvent>) {
                return {{"event", "epoch"}, {"epoch", e.epoch}, {"phase", e.final_phase ? "final" : "swap"},
                        {"lr", e.lr}, {"n_train", e.n_train}, {"n_validation", e.n_validation},
                        {"n_hard", e.n_hard}};
            } else if constexpr (std::is_same_v<E, SwapEvent>) {
                return {{"event", "swap"}, {"epoch", e.epoch}, {"ids_to_train", e.ids_to_train},
                        {"ids_to_val", e.ids_to_val}};
            } else if constexpr (std::is_same_v<E, Termination>) {
                return {{"event", "termination"}, {"epoch", e.epoch}, {"reason", to_string(e.reason)}};
            } else if constexpr (std::is_same_v<E, MergeEvent>) {
                return {{"event", "merge"}, {"epoch", e.epoch}, {"n_train", e.n_train}};
            } else {
                return {{"event", "phase_change"}, {"epoch", e.epoch}, {"new_lr", e.new_lr}};
            }
        },
        ev);
}

/// Seeded shuffle, then the first floor(ratio * n) ids (at least 1, at most
/// n - 1) go to Train.
inline SplitState initial_split(std::vector<std::string> sample_ids, const SchedulerConfig& cfg) {
    cfg.validate();
    if (sample_ids.size() < 2) throw ParameterError("initial_split needs at least 2 samples");
    const std::set<std::string> unique(sample_ids.begin(), sample_ids.end());
    if (unique.size() != sample_ids.size()) throw ParameterError("initial_split: duplicate sample id");
    Rng rng(cfg.seed);
    rng.shuffle(std::span<std::string>(sample_ids));
    const auto n = sample_ids.size();
    auto n_train = static_cast<std::size_t>(cfg.initial_split_ratio * static_cast<double>(n) + 1e-9);
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    SplitState s;
    s.train.assign(sample_ids.begin(), sample_ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.validation.assign(sample_ids.begin() + static_cast<std::ptrdiff_t>(n_train), sample_ids.end());
    return s;
}

/// Hard records by loss descending (ties: id ascending), first swap_count.
inline std::vector<std::string> select_swap(const std::vector<SampleRecord>& val_records, int swap_count) {
    std::vector<const SampleRecord*> hard;
    for (const auto& r : val_records) {
        if (r.is_hard) hard.push_back(&r);
    }
    std::sort(hard.begin(), hard.end(), [](const SampleRecord* a, const SampleRecord* b) {
        const double la = a->last_loss.value_or(0.0), lb = b->last_loss.value_or(0.0);
        if (la != lb) return la > lb;
        return a->sample_id < b->sample_id;
    });
    const auto k = std::min(hard.size(), static_cast<std::size_t>(std::max(swap_count, 0)));
    std::vector<std::string> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(hard[i]->sample_id);
    return out;
}

struct SwapResult {
    SplitState state;
    SwapEvent event;
};

/// Moves `to_train` into Train and an equal number of randomly chosen Train
/// ids (never one of `to_train`) into Validation.
inline SwapResult apply_swap(const SplitState& state, const std::vector<std::string>& to_train,
                             const SchedulerConfig& cfg, int epoch = 0) {
    const std::set<std::string> moving(to_train.begin(), to_train.end());
    if (moving.size() != to_train.size()) throw StateError("apply_swap: duplicate id in promotion list");
    for (const auto& id : to_train) {
        if (!state.in_validation(id)) throw StateError("apply_swap: " + id + " is not in Validation");
    }
    if (state.train.size() < to_train.size()) {
        throw StateError("apply_swap: Train has fewer samples than the swap requires");
    }
    Rng rng(derive_seed(cfg.seed, state.swaps_done + 1));
    std::vector<std::string> pool = state.train;
    rng.shuffle(std::span<std::string>(pool));
    std::vector<std::string> demoted(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(to_train.size()));
    const std::set<std::string> leaving(demoted.begin(), demoted.end());

    SwapResult r;
    for (const auto& id : state.train) {
        if (!leaving.count(id)) r.state.train.push_back(id);
    }
    for (const auto& id : state.validation) {
        if (!moving.count(id)) r.state.validation.push_back(id);
    }
    r.state.train.insert(r.state.train.end(), to_train.begin(), to_train.end());
    r.state.validation.insert(r.state.validation.end(), demoted.begin(), demoted.end());
    r.state.swaps_done = state.swaps_done + 1;
    r.event = SwapEvent{epoch, to_train, demoted};
    return r;
}

struct Validation {
    double loss = 0.0;
    bool is_hard = false;
};

/// What the scheduler needs from a detector. Both calls must answer for every
/// requested id and for nothing else.
class Trainer {
public:
    virtual ~Trainer() = default;
    virtual std::map<std::string, double> train_epoch(const std::vector<std::string>& ids, double lr) = 0;
    virtual std::map<std::string, Validation> validate(const std::vector<std::string>& ids) = 0;
};

namespace detail {

template <class V>
void check_answers(const std::vector<std::string>& ids, const std::map<std::string, V>& got, const char* call) {
    const std::set<std::string> asked(ids.begin(), ids.end());
    for (const auto& [id, v] : got) {
        if (!asked.count(id)) throw ContractError(std::string(call) + " returned unknown id " + id);
    }
    for (const auto& id : ids) {
        if (!got.count(id)) throw ContractError(std::string(call) + " returned no loss for " + id);
    }
}

}  // namespace detail

inline ScheduleLog run_schedule(const std::vector<std::string>& samples, Trainer& trainer,
                                const SchedulerConfig& cfg) {
    cfg.validate();
    ScheduleLog log;
    SplitState state = initial_split(samples, cfg);
    int epoch = 0;
    for (;;) {
        ++epoch;
        detail::check_answers(state.train, trainer.train_epoch(state.train, cfg.initial_lr), "train_epoch");
        const auto answers = trainer.validate(state.validation);
        detail::check_answers(state.validation, answers, "validate");
        std::vector<SampleRecord> records;
        std::size_t n_hard = 0;
        for (const auto& id : state.validation) {
            const auto& v = answers.at(id);
            if (!(v.loss >= 0.0)) throw ContractError("validate returned a negative loss for " + id);
            records.push_back({id, Partition::Validation, v.loss, v.is_hard});
            n_hard += v.is_hard ? 1 : 0;
        }
        log.events.emplace_back(
            EpochEvent{epoch, false, cfg.initial_lr, state.train.size(), state.validation.size(), n_hard});
        const auto promote = select_swap(records, cfg.swap_count);
        if (promote.empty()) {
            log.events.emplace_back(Termination{epoch, Termination::Reason::NoHardSamples});
            break;
        }
        if (epoch >= cfg.max_epochs) {
            log.events.emplace_back(Termination{epoch, Termination::Reason::Cap});
            break;
        }
        auto swapped = apply_swap(state, promote, cfg, epoch);
        state = std::move(swapped.state);
        log.events.emplace_back(std::move(swapped.event));
    }

    state.train.insert(state.train.end(), state.validation.begin(), state.validation.end());
    state.validation.clear();
    log.events.emplace_back(MergeEvent{epoch, state.train.size()});
    const double lr = cfg.final_lr();
    log.events.emplace_back(PhaseChange{epoch, lr});
    for (int k = 0; k < cfg.final_epochs; ++k) {
        ++epoch;
        detail::check_answers(state.train, trainer.train_epoch(state.train, lr), "train_epoch");
        log.events.emplace_back(EpochEvent{epoch, true, lr, state.train.size(), 0, 0});
    }
    log.final_state = std::move(state);
    return log;
}

/// Replays a fixed loss table: sample s at epoch e (1-based) has loss
/// seq[min(e, len) - 1]; ids absent from the table have loss 0. A validation
/// sample is hard when its loss exceeds `hard_threshold`.
class MockTrainer : public Trainer {
public:
    explicit MockTrainer(std::map<std::string, std::vector<double>> profile, double hard_threshold = 0.5)
        : profile_(std::move(profile)), threshold_(hard_threshold) {
        for (const auto& [id, seq] : profile_) {
            for (double v : seq) {
                if (!(v >= 0.0)) throw ParameterError("mock profile loss for " + id + " must be >= 0");
            }
        }
    }

    std::map<std::string, double> train_epoch(const std::vector<std::string>& ids, double lr) override {
        ++epoch_;
        lrs_.push_back(lr);
        std::map<std::string, double> out;
        for (const auto& id : ids) out[id] = loss(id);
        return out;
    }

    std::map<std::string, Validation> validate(const std::vector<std::string>& ids) override {
        std::map<std::string, Validation> out;
        for (const auto& id : ids) {
            const double l = loss(id);
            out[id] = {l, l > threshold_};
        }
        return out;
    }

    int epochs_trained() const { return epoch_; }
    const std::vector<double>& learning_rates() const { return lrs_; }

    static MockTrainer from_json(const nlohmann::json& j, double hard_threshold = 0.5) {
        if (!j.is_object()) throw ParameterError("mock profile must be a JSON object of id -> [losses]");
        std::map<std::string, std::vector<double>> profile;
        for (const auto& [id, seq] : j.items()) {
            if (!seq.is_array() || seq.empty()) {
                throw ParameterError("mock profile entry " + id + " must be a non-empty array");
            }
            for (const auto& v : seq) {
                if (!v.is_number()) throw ParameterError("mock profile entry " + id + " holds a non-number");
                profile[id].push_back(v.get<double>());
            }
        }
        return MockTrainer(std::move(profile), hard_threshold);
    }

private:
    double loss(const std::string& id) const {
        const auto it = profile_.find(id);
        if (it == profile_.end()) return 0.0;
        const auto idx = std::min<std::size_t>(static_cast<std::size_t>(std::max(epoch_, 1) - 1), it->second.size() - 1);
        return it->second[idx];
    }

    std::map<std::string, std::vector<double>> profile_;
    double threshold_;
    int epoch_ = 0;
    std::vector<double> lrs_;
};

}  // namespace mammo::sched
