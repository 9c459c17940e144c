#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace memoir {

struct NodeTokens {
    std::uint64_t input = 0;
    std::uint64_t output = 0;

    NodeTokens& operator+=(const NodeTokens& o) {
        input += o.input;
        output += o.output;
        return *this;
    }
    bool zero() const { return input == 0 && output == 0; }
};

/// Per-node token accounting for one search call. Totals are computed from
/// the rows, so they cannot drift out of sync.
struct TokenLedger {
    NodeTokens router;
    NodeTokens chain;
    NodeTokens split;
    NodeTokens direct;
    std::vector<std::string> notes;

    NodeTokens total() const {
        NodeTokens t;
        t += router;
        t += chain;
        t += split;
        t += direct;
        return t;
    }

    void add_note(std::string n) { notes.push_back(std::move(n)); }

    void merge(const TokenLedger& o) {
        router += o.router;
        chain += o.chain;
        split += o.split;
        direct += o.direct;
        for (const auto& n : o.notes) notes.push_back(n);
    }

    bool agent_rows_zero() const {
        return router.zero() && chain.zero() && split.zero() && direct.zero();
    }
};

} // namespace memoir
