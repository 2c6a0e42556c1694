#include "muse/symbolic/score_json.hpp"

namespace muse {

nlohmann::json to_json(const Score& score) {
    using nlohmann::json;
    json measures = json::array();
    for (const auto& m : score.measures) {
        json events = json::array();
        for (const auto& e : m.events) {
            json pitches = json::array();
            for (const auto& p : e.pitches)
                pitches.push_back({{"step", std::string(1, p.step)},
                                   {"alter", p.alter},
                                   {"octave", p.octave},
                                   {"midi", p.midi()}});
            events.push_back({{"voice", e.voice},
                              {"onset", e.onset.str()},
                              {"duration", e.duration.str()},
                              {"rest", e.is_rest()},
                              {"pitches", std::move(pitches)},
                              {"tie_start", e.tie_start},
                              {"tie_end", e.tie_end}});
        }
        measures.push_back({{"index", m.index},
                            {"time", m.time.str()},
                            {"key", {{"fifths", m.key.fifths}, {"mode", m.key.mode}}},
                            {"pickup", m.pickup},
                            {"repeat_start", m.repeat_start},
                            {"repeat_end", m.repeat_end},
                            {"ending", m.ending},
                            {"events", std::move(events)}});
    }
    return {{"title", score.title},
            {"composer", score.composer},
            {"unit_length", score.default_unit_length.str()},
            {"voices", score.voices},
            {"measures", std::move(measures)}};
}

}  // namespace muse
