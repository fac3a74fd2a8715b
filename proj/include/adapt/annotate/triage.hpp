#pragma once

#include <adapt/error.hpp>

#include <nlohmann/json.hpp>

#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adapt::annotate {

enum class TriageState { unreviewed, ground_truth_ready, minor_corrections_needed, hard_negative, accepted };

[[nodiscard]] constexpr std::string_view to_string(TriageState s) {
    switch (s) {
    case TriageState::unreviewed:
        return "unreviewed";
    case TriageState::ground_truth_ready:
        return "ground-truth-ready";
    case TriageState::minor_corrections_needed:
        return "minor-corrections-needed";
    case TriageState::hard_negative:
        return "hard-negative";
    case TriageState::accepted:
        return "accepted";
    }
    return "?";
}

[[nodiscard]] inline TriageState parse_triage_state(std::string_view s) {
    for (auto st : {TriageState::unreviewed, TriageState::ground_truth_ready, TriageState::minor_corrections_needed,
                    TriageState::hard_negative, TriageState::accepted})
        if (to_string(st) == s)
            return st;
    throw ParseError("unknown triage state '" + std::string(s) + "'");
}

[[nodiscard]] constexpr bool legal_transition(TriageState from, TriageState to) {
    using S = TriageState;
    switch (from) {
    case S::unreviewed:
        return to == S::ground_truth_ready || to == S::minor_corrections_needed || to == S::hard_negative;
    case S::ground_truth_ready:
    case S::minor_corrections_needed:
        return to == S::accepted;
    case S::hard_negative:
        return to == S::unreviewed;
    case S::accepted:
        return false;
    }
    return false;
}

struct Transition {
    std::string image_id;
    TriageState from = TriageState::unreviewed;
    TriageState to = TriageState::unreviewed;
    double time_s = 0.0;  ///< caller-supplied timestamp
    double minutes = 0.0; ///< annotation effort spent on this step

    [[nodiscard]] nlohmann::json to_json() const {
        return {{"image_id", image_id},
                {"from", std::string(to_string(from))},
                {"to", std::string(to_string(to))},
                {"t", time_s},
                {"minutes", minutes}};
    }
};

/// Per-image triage state with an append-only transition log. Images enter
/// as unreviewed; accepted is terminal.
class TriageLedger {
public:
    void add_image(const std::string& image_id) {
        if (!state_.emplace(image_id, TriageState::unreviewed).second)
            throw ContractError("image '" + image_id + "' already in the ledger");
        order_.push_back(image_id);
    }

    void transition(const std::string& image_id, TriageState to, double time_s, double minutes) {
        const auto it = state_.find(image_id);
        if (it == state_.end())
            throw ContractError("image '" + image_id + "' not in the ledger");
        if (!legal_transition(it->second, to))
            throw TransitionError("illegal transition " + std::string(to_string(it->second)) + " -> " +
                                  std::string(to_string(to)) + " for '" + image_id + "'");
        if (!(minutes >= 0.0))
            throw ContractError("annotation minutes must be non-negative");
        log_.push_back({image_id, it->second, to, time_s, minutes});
        it->second = to;
    }

    [[nodiscard]] TriageState state(const std::string& image_id) const {
        const auto it = state_.find(image_id);
        if (it == state_.end())
            throw ContractError("image '" + image_id + "' not in the ledger");
        return it->second;
    }

    [[nodiscard]] const std::vector<std::string>& images() const { return order_; }
    [[nodiscard]] const std::vector<Transition>& log() const { return log_; }
    [[nodiscard]] bool empty() const { return order_.empty(); }

    /// One JSON object per line, one line per transition. Images without
    /// transitions appear as a bare registration line.
    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::trunc);
        if (!out)
            throw IoError("cannot write ledger '" + path + "'");
        for (const auto& id : order_)
            out << nlohmann::json{{"image_id", id}, {"register", true}}.dump() << '\n';
        for (const auto& t : log_)
            out << t.to_json().dump() << '\n';
    }

    /// Replays a saved ledger, re-checking every transition.
    [[nodiscard]] static TriageLedger load(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw IoError("cannot open ledger '" + path + "'");
        TriageLedger l;
        std::string line;
        int n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (line.empty())
                continue;
            try {
                const auto j = nlohmann::json::parse(line);
                const auto id = j.at("image_id").get<std::string>();
                if (j.value("register", false)) {
                    l.add_image(id);
                    continue;
                }
                if (!l.state_.count(id))
                    l.add_image(id);
                const auto from = parse_triage_state(j.at("from").get<std::string>());
                if (l.state(id) != from)
                    throw TransitionError("ledger line " + std::to_string(n) + " starts from the wrong state");
                l.transition(id, parse_triage_state(j.at("to").get<std::string>()), j.at("t").get<double>(),
                             j.value("minutes", 0.0));
            } catch (const nlohmann::json::exception& e) {
                throw ParseError("ledger line " + std::to_string(n) + ": " + e.what());
            }
        }
        return l;
    }

private:
    std::map<std::string, TriageState> state_;
    std::vector<std::string> order_;
    std::vector<Transition> log_;
};

/// The three sorting outcomes, in report order.
inline constexpr std::array<TriageState, 3> kTriagePaths{
    TriageState::ground_truth_ready, TriageState::minor_corrections_needed, TriageState::hard_negative};

struct TriagePathSummary {
    TriageState path = TriageState::ground_truth_ready;
    std::size_t images = 0;
    double fraction = 0.0;
    std::optional<double> mean_minutes;
};

struct TriageReport {
    std::size_t triaged = 0;
    std::size_t accepted = 0;
    std::vector<TriagePathSummary> paths;
    std::vector<std::string> warnings;

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json p = nlohmann::json::array();
        for (const auto& s : paths) {
            nlohmann::json e{{"path", std::string(to_string(s.path))}, {"images", s.images}, {"fraction", s.fraction}};
            e["mean_minutes"] = s.mean_minutes ? nlohmann::json(*s.mean_minutes) : nlohmann::json(nullptr);
            p.push_back(e);
        }
        return {{"triaged", triaged}, {"accepted", accepted}, {"paths", p}, {"warnings", warnings}};
    }
};

/// Groups images by their first triage decision. Minutes are summed over all
/// of an image's transitions and averaged per group. Images never triaged are
/// excluded, with a warning.
[[nodiscard]] inline TriageReport triage_report(const TriageLedger& ledger) {
    if (ledger.empty())
        throw ContractError("triage report of an empty ledger");
    std::map<std::string, std::optional<TriageState>> first;
    std::map<std::string, double> minutes;
    for (const auto& t : ledger.log()) {
        if (!first[t.image_id] && t.from == TriageState::unreviewed)
            first[t.image_id] = t.to;
        minutes[t.image_id] += t.minutes;
    }
    TriageReport rep;
    std::map<TriageState, std::pair<std::size_t, double>> acc;
    for (const auto& id : ledger.images()) {
        const auto it = first.find(id);
        if (it == first.end() || !it->second) {
            rep.warnings.push_back("image '" + id + "' has no triage transitions; excluded");
            continue;
        }
        ++rep.triaged;
        auto& a = acc[*it->second];
        ++a.first;
        a.second += minutes[id];
        rep.accepted += ledger.state(id) == TriageState::accepted;
    }
    for (auto p : kTriagePaths) {
        TriagePathSummary s;
        s.path = p;
        s.images = acc[p].first;
        s.fraction = rep.triaged ? static_cast<double>(s.images) / static_cast<double>(rep.triaged) : 0.0;
        if (s.images)
            s.mean_minutes = acc[p].second / static_cast<double>(s.images);
        rep.paths.push_back(s);
    }
    return rep;
}

} // namespace adapt::annotate
