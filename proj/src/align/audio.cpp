#include "muse/align/audio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "muse/dsp/audio.hpp"

namespace muse::align {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct Best {
    double value = kNegInf;
    int state = -1;

    void offer(double v, int s) {
        if (v > value || (v == value && s < state)) {
            value = v;
            state = s;
        }
    }
};

// Harmonic template over the CQT bins of one pitch set.
Vector pitch_template(const std::vector<int>& pitches, int bins) {
    static constexpr int kOffsets[] = {0, 12, 19, 24};
    static constexpr double kWeights[] = {1.0, 0.25, 1.0 / 9.0, 1.0 / 16.0};
    Vector t = Vector::Zero(bins);
    for (int p : pitches)
        for (int h = 0; h < 4; ++h) {
            const int bin = p - dsp::kLowestPitch + kOffsets[h];
            if (bin >= 0 && bin < bins) t(bin) += kWeights[h];
        }
    const double norm = t.norm();
    if (norm > 0) t /= norm;
    return t;
}

GmmParams fit_class(const Matrix& frames, const BankOptions& options, const char* name, Warnings* warnings) {
    if (frames.rows() == 0)
        throw Error(ErrorCode::InvalidArgument, std::string("no ") + name + " frames to train on");
    GmmOptions g;
    g.components = std::min<int>(options.components, static_cast<int>(frames.rows()));
    if (g.components < options.components && warnings)
        warnings->push_back(std::string("only ") + std::to_string(frames.rows()) + " " + name +
                            " frames; using " + std::to_string(g.components) + " components");
    g.variance_floor = options.variance_floor;
    g.seed = options.seed;
    return fit_gmm(frames, g, warnings).params;
}

// Everything the decoders need, precomputed per frame and per distinct
// pitch set.
class Scorer {
public:
    Scorer(const dsp::FeatureMatrix& features, const ReferenceEvents& reference, const GmmBank& bank,
           const AudioAlignOptions& options, const dsp::Transcription* transcription)
        : n_(static_cast<int>(reference.events.size())) {
        if (n_ == 0) throw Error(ErrorCode::InvalidArgument, "reference has no events");
        const Matrix& x = features.values;
        const auto T = x.rows();
        if (transcription && transcription->onsets.size() > 0 &&
            (transcription->onsets.rows() != T || transcription->onsets.cols() != x.cols()))
            throw Error(ErrorCode::ShapeMismatch, "transcription onsets do not match the feature frames");

        const Matrix projected = dsp::pca_transform(bank.pca, x);
        sound_ = gmm_log_density(bank.sound, projected);
        silence_ = gmm_log_density(bank.silence, projected);

        std::map<std::vector<int>, int> ids;
        for (const auto& e : reference.events) {
            const auto [it, inserted] = ids.emplace(e.pitches, static_cast<int>(ids.size()));
            set_of_.push_back(it->second);
        }
        const auto U = static_cast<Eigen::Index>(ids.size());
        Matrix templates(U, x.cols());
        std::vector<const std::vector<int>*> sets(static_cast<size_t>(U));
        for (const auto& [pitches, id] : ids) {
            templates.row(id) = pitch_template(pitches, static_cast<int>(x.cols())).transpose();
            sets[static_cast<size_t>(id)] = &pitches;
        }
        const Matrix linear = x.array().unaryExpr([](double v) { return std::pow(10.0, v); }).matrix();
        const Vector norms = linear.rowwise().norm();
        const Matrix dots = linear * templates.transpose();
        sounding_ = Matrix(T, U);
        for (Eigen::Index t = 0; t < T; ++t)
            for (Eigen::Index u = 0; u < U; ++u) {
                const double cos = norms(t) > 0 ? dots(t, u) / norms(t) : 0.0;
                sounding_(t, u) = sound_(t) + options.template_weight * std::log(std::max(cos, 1e-3));
            }

        onset_ = Matrix::Zero(T, U);
        held_ = Matrix::Zero(T, U);
        if (transcription && transcription->onsets.size() > 0)
            for (Eigen::Index t = 0; t < T; ++t)
                for (Eigen::Index u = 0; u < U; ++u) {
                    double best = 0.0;
                    for (int p : *sets[static_cast<size_t>(u)]) {
                        const int bin = p - dsp::kLowestPitch;
                        if (bin >= 0 && bin < transcription->onsets.cols())
                            best = std::max(best, transcription->onsets(t, bin));
                    }
                    onset_(t, u) = options.onset_weight * std::log(std::max(best, options.onset_floor));
                    held_(t, u) = options.onset_weight * std::log(std::max(1.0 - best, options.onset_floor));
                }

        log_alpha_ = std::log(options.sustain_sound_prob);
        log_beta_ = std::log1p(-options.sustain_sound_prob);
    }

    Eigen::Index frames() const { return sound_.size(); }
    int events() const { return n_; }

    double onset(Eigen::Index t, int j) const {
        const auto u = set_of_[static_cast<size_t>(j)];
        return sounding_(t, u) + onset_(t, u);
    }
    double sustain(Eigen::Index t, int j) const {
        const auto u = set_of_[static_cast<size_t>(j)];
        return log_add(log_alpha_ + sounding_(t, u), log_beta_ + silence_(t)) + held_(t, u);
    }
    double silence(Eigen::Index t) const { return silence_(t); }

private:
    int n_;
    Vector sound_, silence_;
    Matrix sounding_, onset_, held_;  // onset evidence for onset and sustain states
    std::vector<Eigen::Index> set_of_;
    double log_alpha_ = 0.0, log_beta_ = 0.0;
};

// Frame-clocked parameters shared by both decoders.
struct Layers {
    std::vector<double> log_stay;   // sustain self-loop
    std::vector<double> log_leave;  // log(1 - stay)
    double to_silence;              // log σ
    double to_event;                // log(1 - σ)
    double silence_stay;
    double silence_exit;            // per onset state
};

Layers make_layers(const ReferenceEvents& reference, double frame_period, const AudioAlignOptions& o) {
    const auto n = reference.events.size();
    Layers l;
    for (size_t j = 0; j < n; ++j) {
        const auto& e = reference.events[j];
        double ioi = 0.0;
        if (j + 1 < n) {
            ioi = reference.events[j + 1].onset_sec - e.onset_sec;
        } else {
            for (double d : e.durations_beats) ioi = std::max(ioi, d * reference.seconds_per_beat());
        }
        ioi = std::max(ioi, 1.5 * frame_period);
        const double stay = std::exp(-frame_period / ioi);
        l.log_stay.push_back(std::log(stay));
        l.log_leave.push_back(std::log1p(-stay));
    }
    l.to_silence = std::log(o.silence_prob);
    l.to_event = std::log1p(-o.silence_prob);
    l.silence_stay = std::log(o.silence_self);
    l.silence_exit = std::log((1.0 - o.silence_self) / static_cast<double>(n));
    return l;
}

struct Segment {
    int event;
    Eigen::Index begin;  // frame entering the onset state
    Eigen::Index end;    // one past the last frame
};

std::vector<Segment> segments_of(const std::vector<int>& path, int n) {
    std::vector<Segment> out;
    for (size_t t = 0; t < path.size(); ++t) {
        const int s = path[t];
        if (s >= 2 * n) continue;
        if (s % 2 == 0) {
            out.push_back({s / 2, static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t) + 1});
        } else if (!out.empty() && out.back().event == s / 2 && out.back().end == static_cast<Eigen::Index>(t)) {
            out.back().end = static_cast<Eigen::Index>(t) + 1;
        }
    }
    return out;
}

}  // namespace

GmmBank train_gmm_bank(const std::vector<LabeledFrames>& data, const BankOptions& options, Warnings* warnings) {
    std::vector<Matrix> sets;
    Eigen::Index sounding = 0, silent = 0;
    for (const auto& d : data) {
        if (static_cast<Eigen::Index>(d.sounding.size()) != d.cqt.rows())
            throw Error(ErrorCode::DimensionMismatch, "one label per frame required");
        sets.push_back(d.cqt);
        for (bool s : d.sounding) (s ? sounding : silent) += 1;
    }
    GmmBank bank;
    bank.pca = dsp::pca_fit(sets, options.pca_dims, warnings);
    Matrix sound(sounding, options.pca_dims), quiet(silent, options.pca_dims);
    Eigen::Index a = 0, b = 0;
    for (const auto& d : data) {
        const Matrix projected = dsp::pca_transform(bank.pca, d.cqt);
        for (Eigen::Index t = 0; t < projected.rows(); ++t) {
            if (d.sounding[static_cast<size_t>(t)])
                sound.row(a++) = projected.row(t);
            else
                quiet.row(b++) = projected.row(t);
        }
    }
    bank.sound = fit_class(sound, options, "sounding", warnings);
    bank.silence = fit_class(quiet, options, "silent", warnings);
    return bank;
}

LabeledFrames reference_frames(const ReferenceEvents& reference, const dsp::CqtConfig& config, double lead_sec) {
    PerformanceNotes notes = render(reference);
    for (auto& n : notes) {
        n.onset_sec += lead_sec;
        n.offset_sec += lead_sec;
    }
    dsp::SynthOptions synth;
    synth.sample_rate = config.sample_rate;
    const auto features = dsp::compute_cqt(dsp::synthesize(notes, synth), config);
    LabeledFrames out{features.values, std::vector<bool>(static_cast<size_t>(features.values.rows()), false)};
    for (size_t t = 0; t < out.sounding.size(); ++t) {
        const double time = static_cast<double>(t) * features.frame_period;
        for (const auto& n : notes)
            if (n.onset_sec <= time && time < n.offset_sec) {
                out.sounding[t] = true;
                break;
            }
    }
    return out;
}

LabeledFrames energy_frames(const dsp::FeatureMatrix& features, double range) {
    const Matrix& x = features.values;
    LabeledFrames out{x, std::vector<bool>(static_cast<size_t>(x.rows()), false)};
    if (x.size() == 0) return out;
    const double top = x.maxCoeff();
    for (Eigen::Index t = 0; t < x.rows(); ++t) out.sounding[static_cast<size_t>(t)] = x.row(t).maxCoeff() > top - range;
    return out;
}

namespace {

nlohmann::json matrix_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::vector<double> row(m.row(r).data(), m.row(r).data() + m.cols());
        rows.push_back(row);
    }
    return rows;
}

Matrix matrix_from(const nlohmann::json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(j[static_cast<size_t>(r)].size()) != cols)
            throw Error(ErrorCode::DimensionMismatch, "ragged matrix");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[static_cast<size_t>(r)][static_cast<size_t>(c)];
    }
    return m;
}

std::vector<double> vector_json(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector vector_from(const nlohmann::json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

nlohmann::json gmm_json(const GmmParams& p) {
    return {{"weights", vector_json(p.weights)}, {"means", matrix_json(p.means)}, {"variances", matrix_json(p.variances)}};
}

GmmParams gmm_from(const nlohmann::json& j) {
    return {vector_from(j.at("weights")), matrix_from(j.at("means")), matrix_from(j.at("variances"))};
}

}  // namespace

nlohmann::json to_json(const GmmBank& bank) {
    return {{"pca",
             {{"mean", vector_json(bank.pca.mean)},
              {"components", matrix_json(bank.pca.components)},
              {"eigenvalues", vector_json(bank.pca.eigenvalues)}}},
            {"sound", gmm_json(bank.sound)},
            {"silence", gmm_json(bank.silence)}};
}

GmmBank gmm_bank_from_json(const nlohmann::json& j) {
    try {
        GmmBank bank;
        const auto& pca = j.at("pca");
        bank.pca.mean = vector_from(pca.at("mean"));
        bank.pca.components = matrix_from(pca.at("components"));
        bank.pca.eigenvalues = vector_from(pca.at("eigenvalues"));
        bank.sound = gmm_from(j.at("sound"));
        bank.silence = gmm_from(j.at("silence"));
        return bank;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed GMM bank: ") + e.what());
    }
}

DenseModel audio_dense_model(const dsp::FeatureMatrix& features, const ReferenceEvents& reference,
                             const GmmBank& bank, const AudioAlignOptions& options,
                             const dsp::Transcription* transcription) {
    const Scorer scorer(features, reference, bank, options, transcription);
    const int n = scorer.events();
    const HmmModel model(n, options.transitions);
    const Layers l = make_layers(reference, features.frame_period, options);
    const int S = 2 * n + 1, sil = 2 * n;
    DenseModel d;
    d.log_obs.resize(scorer.frames(), S);
    for (Eigen::Index t = 0; t < scorer.frames(); ++t) {
        for (int j = 0; j < n; ++j) {
            d.log_obs(t, 2 * j) = scorer.onset(t, j);
            d.log_obs(t, 2 * j + 1) = scorer.sustain(t, j);
        }
        d.log_obs(t, sil) = scorer.silence(t);
    }
    d.log_init = Vector::Constant(S, kNegInf);
    d.log_init(sil) = std::log(0.5);
    for (int k = 0; k < n; ++k) d.log_init(2 * k) = std::log(0.5) + model.log_transition(-1, k);
    d.log_trans = Matrix::Constant(S, S, kNegInf);
    for (int j = 0; j < n; ++j) {
        d.log_trans(2 * j, 2 * j + 1) = 0.0;
        d.log_trans(2 * j + 1, 2 * j + 1) = l.log_stay[static_cast<size_t>(j)];
        const double leave = l.log_leave[static_cast<size_t>(j)];
        d.log_trans(2 * j + 1, sil) = leave + l.to_silence;
        for (int k = 0; k < n; ++k) d.log_trans(2 * j + 1, 2 * k) = leave + l.to_event + model.log_transition(j, k);
        d.log_trans(sil, 2 * j) = l.silence_exit;
    }
    d.log_trans(sil, sil) = l.silence_stay;
    return d;
}

AlignmentResult align_audio(const dsp::FeatureMatrix& features, const ReferenceEvents& reference,
                            const GmmBank& bank, const AudioAlignOptions& options,
                            const dsp::Transcription* transcription) {
    const Scorer scorer(features, reference, bank, options, transcription);
    const int n = scorer.events();
    const HmmModel model(n, options.transitions);
    const Layers l = make_layers(reference, features.frame_period, options);
    const auto& tp = options.transitions;
    const double log_r = std::log(tp.ratio);
    const double log_skip = std::log(tp.skip * (1.0 - tp.ratio));
    const double log_back = std::log(tp.backward * (1.0 - tp.ratio));
    const double log_fwd = std::log(tp.forward), log_self = std::log(tp.self);
    const int S = 2 * n + 1, sil = 2 * n;
    const Eigen::Index T = scorer.frames();

    AlignmentResult result;
    if (transcription) result.performance = transcription->notes;
    if (T == 0) {
        for (int s = 0; s < n; ++s) result.correspondences.missing.push_back(s);
        for (size_t i = 0; i < result.performance.size(); ++i) result.correspondences.extra.push_back(static_cast<int>(i));
        return result;
    }

    std::vector<double> delta(static_cast<size_t>(S), kNegInf), next(static_cast<size_t>(S));
    std::vector<int> back(static_cast<size_t>(T) * static_cast<size_t>(S), -1);
    delta[static_cast<size_t>(sil)] = std::log(0.5) + scorer.silence(0);
    for (int k = 0; k < n; ++k)
        delta[static_cast<size_t>(2 * k)] = std::log(0.5) + model.log_transition(-1, k) + scorer.onset(0, k);

    std::vector<double> src(static_cast<size_t>(n));
    std::vector<Best> from_back(static_cast<size_t>(n));
    for (Eigen::Index t = 1; t < T; ++t) {
        int* bp = back.data() + static_cast<size_t>(t) * static_cast<size_t>(S);
        // Sustain j leaving towards an onset, before the top-layer weight.
        for (int j = 0; j < n; ++j)
            src[static_cast<size_t>(j)] = delta[static_cast<size_t>(2 * j + 1)] + l.log_leave[static_cast<size_t>(j)] +
                                          l.to_event - model.log_normalizer(j);
        const auto at = [&](int j) { return src[static_cast<size_t>(j)]; };
        Best run;
        for (int k = n - 2; k >= 0; --k) {
            Best moved{run.value + log_r, run.state};
            moved.offer(at(k + 1), k + 1);
            run = moved;
            from_back[static_cast<size_t>(k)] = run;
        }
        Best skip_run;
        const double from_silence = delta[static_cast<size_t>(sil)] + l.silence_exit;
        for (int k = 0; k < n; ++k) {
            if (k >= 2) {
                Best moved{skip_run.value + log_r, skip_run.state};
                moved.offer(at(k - 2), k - 2);
                skip_run = moved;
            }
            Best b;
            if (k >= 2 && skip_run.state >= 0) b.offer(skip_run.value + log_skip, skip_run.state);
            if (k >= 1) b.offer(at(k - 1) + log_fwd, k - 1);
            b.offer(at(k) + log_self, k);
            const Best& fb = from_back[static_cast<size_t>(k)];
            if (k + 1 < n && fb.state >= 0) b.offer(fb.value + log_back, fb.state);
            Best onset;
            if (b.state >= 0) onset.offer(b.value, 2 * b.state + 1);
            onset.offer(from_silence, sil);
            next[static_cast<size_t>(2 * k)] = onset.value + scorer.onset(t, k);
            bp[2 * k] = onset.state;

            Best sustain;
            sustain.offer(delta[static_cast<size_t>(2 * k)], 2 * k);
            sustain.offer(delta[static_cast<size_t>(2 * k + 1)] + l.log_stay[static_cast<size_t>(k)], 2 * k + 1);
            next[static_cast<size_t>(2 * k + 1)] = sustain.value + scorer.sustain(t, k);
            bp[2 * k + 1] = sustain.state;
        }
        Best quiet;
        for (int j = 0; j < n; ++j)
            quiet.offer(delta[static_cast<size_t>(2 * j + 1)] + l.log_leave[static_cast<size_t>(j)] + l.to_silence,
                        2 * j + 1);
        quiet.offer(delta[static_cast<size_t>(sil)] + l.silence_stay, sil);
        next[static_cast<size_t>(sil)] = quiet.value + scorer.silence(t);
        bp[sil] = quiet.state;
        delta.swap(next);
    }

    Best final;
    for (int s = 0; s < S; ++s) final.offer(delta[static_cast<size_t>(s)], s);
    if (!std::isfinite(final.value)) throw Error(ErrorCode::NoFeasiblePath, "no alignment path has non-zero probability");
    result.log_prob = final.value;
    result.path.assign(static_cast<size_t>(T), 0);
    int state = final.state;
    for (Eigen::Index t = T - 1; t >= 0; --t) {
        result.path[static_cast<size_t>(t)] = state;
        if (t > 0) state = back[static_cast<size_t>(t) * static_cast<size_t>(S) + static_cast<size_t>(state)];
    }

    const double fp = features.frame_period;
    const auto segments = segments_of(result.path, n);
    for (const auto& s : segments) result.onsets_sec.emplace(s.event, static_cast<double>(s.begin) * fp);

    std::vector<NoteAssignment> assignments;
    if (transcription) {
        // Each transcribed note goes to the nearest visited event sounding its pitch.
        assignments.resize(result.performance.size());
        for (size_t i = 0; i < result.performance.size(); ++i) {
            const auto& note = result.performance[i];
            double best = options.match_tolerance_sec;
            for (const auto& s : segments) {
                const auto& pitches = reference.events[static_cast<size_t>(s.event)].pitches;
                if (!std::binary_search(pitches.begin(), pitches.end(), note.pitch)) continue;
                const double gap = std::abs(static_cast<double>(s.begin) * fp - note.onset_sec);
                if (gap <= best) {
                    if (gap == best && assignments[i].score_index >= 0) continue;
                    best = gap;
                    assignments[i].score_index = s.event;
                }
            }
        }
    } else {
        for (const auto& s : segments)
            for (int p : reference.events[static_cast<size_t>(s.event)].pitches) {
                result.performance.push_back({p, static_cast<double>(s.begin) * fp, static_cast<double>(s.end) * fp});
                assignments.push_back({s.event});
            }
    }
    result.correspondences = extract_correspondences(assignments, result.performance, reference);
    return result;
}

}  // namespace muse::align
