#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mammo/error.hpp"
#include "mammo/pipeline/manifest.hpp"
#include "mammo/random.hpp"

namespace mammo::pipeline {

/// Fold index per kept entry. Entries sharing a breast_id (the two views of
/// one breast) always land in the same fold. Groups are shuffled with `seed`
/// and each goes to the fold holding the fewest images so far (lowest index
/// on ties). With `masses_only`, entries without boxes are left out.
struct FoldAssignment {
    std::vector<ManifestEntry> entries;
    std::vector<int> fold;
};

inline FoldAssignment assign_folds(const Manifest& m, int folds, std::uint64_t seed, bool masses_only) {
    if (folds < 2) throw ParameterError("need at least 2 folds");
    FoldAssignment a;
    std::map<std::string, std::vector<std::size_t>> groups;
    for (const auto& e : m.entries) {
        if (masses_only && e.boxes.empty()) continue;
        groups[e.breast_id].push_back(a.entries.size());
        a.entries.push_back(e);
    }
    std::vector<std::string> keys;
    for (const auto& [k, v] : groups) keys.push_back(k);
    Rng rng(seed);
    rng.shuffle(std::span<std::string>(keys));
    std::vector<std::size_t> load(static_cast<std::size_t>(folds), 0);
    a.fold.assign(a.entries.size(), 0);
    for (const auto& k : keys) {
        const auto f = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
        for (auto idx : groups[k]) a.fold[idx] = static_cast<int>(f);
        load[f] += groups[k].size();
    }
    return a;
}

/// One manifest per fold: that fold's entries tagged "test", the rest "train".
inline std::vector<Manifest> split_folds(const Manifest& m, int folds, std::uint64_t seed, bool masses_only) {
    const auto a = assign_folds(m, folds, seed, masses_only);
    std::vector<Manifest> out(static_cast<std::size_t>(folds));
    for (int f = 0; f < folds; ++f) {
        for (std::size_t i = 0; i < a.entries.size(); ++i) {
            auto e = a.entries[i];
            e.split = a.fold[i] == f ? "test" : "train";
            out[static_cast<std::size_t>(f)].entries.push_back(std::move(e));
        }
    }
    return out;
}

}  // namespace mammo::pipeline
