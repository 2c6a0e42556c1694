#pragma once

#include "json.hpp"

#include "muse/symbolic/score.hpp"

namespace muse {

/// Canonical debug dump of a score: {title, composer, unit_length, voices,
/// measures:[{index, time, key, pickup, repeat_start, repeat_end, ending,
/// events:[...]}]}. Fractions are written as "num/den" strings.
nlohmann::json to_json(const Score& score);

}  // namespace muse
