// Copyright 2026 The drivekit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Discrete 2-D action vocabulary over second differences of position:
// the zero action continues constant velocity, and decoding applies
//   s[t+1] = s[t] + (s[t] - s[t-1]) + a[t]
// exactly. Encoding snaps continuous residuals to the nearest grid action.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dgk/common.hpp"
#include "dgk/geometry.hpp"

namespace dgk {

/// Square, zero-centered action grid. `max_accel` is the grid half-width in
/// position-delta units per tick (acceleration times tick_duration squared).
struct ActionVocabulary {
    int bins_per_axis = 13;   // odd, so the exact zero action exists
    double max_accel = 0.03;  // meters per tick^2

    ActionVocabulary() = default;
    ActionVocabulary(int bins, double max_a) : bins_per_axis(bins), max_accel(max_a) {
        validate();
    }

    void validate() const {
        if (bins_per_axis < 3 || bins_per_axis % 2 == 0) {
            throw ConfigError{"bins_per_axis must be odd and >= 3", "vocab.bins_per_axis"};
        }
        if (!(max_accel > 0.0)) {
            throw ConfigError{"max_accel must be positive", "vocab.max_accel"};
        }
    }

    int size() const noexcept { return bins_per_axis * bins_per_axis; }

    double cell() const noexcept { return 2.0 * max_accel / (bins_per_axis - 1); }

    /// Half diagonal of one grid cell: the worst-case snap error inside
    /// the grid extent.
    double half_cell_diagonal() const noexcept {
        return 0.5 * cell() * 1.4142135623730951;
    }

    int mid() const noexcept { return (bins_per_axis - 1) / 2; }

    int zero_token() const noexcept { return mid() * bins_per_axis + mid(); }

    /// Row-major token -> action value. Index 0 is the most negative corner.
    /// Values are (index - mid) * cell, so the grid is exactly symmetric and
    /// the center token is exactly (0, 0).
    Vec2 action(int token) const {
        DGK_REQUIRE(token >= 0 && token < size(), "token out of range");
        const int ix = token / bins_per_axis;
        const int iy = token % bins_per_axis;
        return {(ix - mid()) * cell(), (iy - mid()) * cell()};
    }

    /// Nearest grid action by Euclidean distance. Components beyond the grid
    /// extent clamp to the boundary (reported through `saturated`); exact
    /// ties resolve to the lowest index.
    int quantize(const Vec2& a, bool* saturated = nullptr) const {
        const double c = cell();
        const int m = mid();
        auto snap_axis = [&](double v) {
            const double clamped = std::fmin(max_accel, std::fmax(-max_accel, v));
            if (saturated != nullptr && clamped != v) {
                *saturated = true;
            }
            int k = static_cast<int>(std::floor(clamped / c + 0.5));
            k = std::min(m, std::max(-m, k));
            // Settle nearest-with-ties-to-lower against the exact grid values
            // (the floor estimate can land one off under rounding).
            double best = std::fabs(clamped - k * c);
            if (k - 1 >= -m) {
                const double lower = std::fabs(clamped - (k - 1) * c);
                if (lower <= best) {
                    --k;
                    best = lower;
                }
            }
            if (k + 1 <= m) {
                if (std::fabs(clamped - (k + 1) * c) < best) {
                    ++k;
                }
            }
            return m + k;
        };
        return snap_axis(a.x) * bins_per_axis + snap_axis(a.y);
    }
};

struct TokenSequence {
    std::vector<std::int32_t> tokens;

    int length() const noexcept { return static_cast<int>(tokens.size()); }
    bool operator==(const TokenSequence& o) const = default;
};

struct EncodeDiagnostics {
    int saturated_ticks = 0;      // residual fell outside the grid extent
    double max_residual = 0.0;    // largest |residual| component seen
};

enum class PrefixMode {
    /// Residuals measured against the running reconstruction, so snap errors
    /// do not compound (used when encoding trajectories for replay).
    reconstructed,
    /// Residuals measured against the raw input positions (the teacher path:
    /// per-step targets stay independent of earlier snapping).
    ground_truth
};

/// Quantize a trajectory into action tokens. `positions` holds T+2 entries:
/// two seed states s[-1], s[0] followed by the T future positions.
inline TokenSequence positions_to_actions(const std::vector<Vec2>& positions,
                                          const ActionVocabulary& vocab,
                                          PrefixMode mode = PrefixMode::reconstructed,
                                          EncodeDiagnostics* diag = nullptr) {
    DGK_REQUIRE(positions.size() >= 3, "need two seed states plus at least one future position");
    const int horizon = static_cast<int>(positions.size()) - 2;

    TokenSequence out;
    out.tokens.reserve(static_cast<std::size_t>(horizon));

    Vec2 prev = positions[0];  // s[t-1] along the chosen prefix
    Vec2 cur = positions[1];   // s[t]
    for (int t = 0; t < horizon; ++t) {
        const Vec2 target = positions[static_cast<std::size_t>(t) + 2];
        const Vec2 residual = target - cur - (cur - prev);
        bool sat = false;
        const int token = vocab.quantize(residual, &sat);
        out.tokens.push_back(token);
        if (diag != nullptr) {
            if (sat) {
                ++diag->saturated_ticks;
            }
            diag->max_residual = std::fmax(
                diag->max_residual, std::fmax(std::fabs(residual.x), std::fabs(residual.y)));
        }
        if (mode == PrefixMode::reconstructed) {
            const Vec2 next = cur + (cur - prev) + vocab.action(token);
            prev = cur;
            cur = next;
        } else {
            prev = cur;
            cur = target;
        }
    }
    return out;
}

/// Exact Verlet integration of a token sequence from seed states.
inline std::vector<Vec2> actions_to_positions(const TokenSequence& tokens, const Vec2& s_minus1,
                                              const Vec2& s_0, const ActionVocabulary& vocab) {
    std::vector<Vec2> out;
    out.reserve(tokens.tokens.size());
    Vec2 prev = s_minus1;
    Vec2 cur = s_0;
    for (const auto token : tokens.tokens) {
        const Vec2 next = cur + (cur - prev) + vocab.action(token);
        out.push_back(next);
        prev = cur;
        cur = next;
    }
    return out;
}

}  // namespace dgk
