#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gps/numeric.hpp"

namespace gps {

/// Where a checked inequality was tightest.
template <class T>
struct Witness {
    T s{0};
    T t{0};
    std::vector<std::size_t> flows;
    std::string detail;
};

/// Outcome of checking an inequality LHS >= RHS at many places; slack is
/// LHS - RHS and the check passes iff the worst slack is >= -tolerance.
template <class T>
struct BoundReport {
    std::string name;
    T tolerance{0};
    std::size_t checked = 0;
    std::optional<T> worst_slack;
    std::optional<Witness<T>> witness;

    bool pass() const { return !worst_slack || !(*worst_slack < T(-tolerance)); }

    void record(const T& slack, const Witness<T>& where) {
        ++checked;
        if (!worst_slack || slack < *worst_slack) {
            worst_slack = slack;
            witness = where;
        }
    }

    /// As record, building the witness only when it is needed.
    template <class MakeWitness>
    void record_with(const T& slack, MakeWitness&& where) {
        ++checked;
        if (!worst_slack || slack < *worst_slack) {
            worst_slack = slack;
            witness = where();
        }
    }

    void merge(const BoundReport& other) {
        checked += other.checked - (other.worst_slack ? 1 : 0);
        if (other.worst_slack) record(*other.worst_slack, *other.witness);
    }

    std::string summary() const {
        std::string out = name + ": " + (pass() ? "pass" : "FAIL") + " (" + std::to_string(checked) + " checks";
        if (worst_slack) out += ", worst slack " + to_decimal(*worst_slack);
        out += ")";
        if (!pass() && witness) {
            out += " at s=" + to_decimal(witness->s) + " t=" + to_decimal(witness->t);
            if (!witness->flows.empty()) {
                out += " flows";
                for (auto j : witness->flows) out += " " + std::to_string(j);
            }
            if (!witness->detail.empty()) out += " [" + witness->detail + "]";
        }
        return out;
    }
};

}  // namespace gps
