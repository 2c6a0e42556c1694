#include "muse/dsp/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>

#include "muse/common/error.hpp"
#include "muse/common/file.hpp"

namespace muse::dsp {

namespace {

std::uint32_t le(std::string_view s, size_t at, int bytes) {
    std::uint32_t v = 0;
    for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(s[at + static_cast<size_t>(i)]);
    return v;
}

double sample_at(std::string_view data, size_t at, int format, int bits) {
    if (format == 3) {
        if (bits == 32) {
            const std::uint32_t raw = le(data, at, 4);
            float f;
            std::memcpy(&f, &raw, 4);
            return f;
        }
        std::uint64_t raw = le(data, at, 4) | static_cast<std::uint64_t>(le(data, at + 4, 4)) << 32;
        double d;
        std::memcpy(&d, &raw, 8);
        return d;
    }
    switch (bits) {
        case 8: return (static_cast<double>(static_cast<std::uint8_t>(data[at])) - 128.0) / 128.0;
        case 16: return static_cast<std::int16_t>(le(data, at, 2)) / 32768.0;
        case 24: {
            std::int32_t v = static_cast<std::int32_t>(le(data, at, 3) << 8) >> 8;
            return v / 8388608.0;
        }
        default: return static_cast<std::int32_t>(le(data, at, 4)) / 2147483648.0;
    }
}

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

}  // namespace

AudioBuffer decode_wav(std::string_view bytes) {
    if (bytes.size() < 12 || bytes.substr(0, 4) != "RIFF" || bytes.substr(8, 4) != "WAVE")
        throw Error(ErrorCode::UnsupportedCodec, "not a RIFF/WAVE file");
    int format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::string_view data;
    bool have_fmt = false, have_data = false;
    size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const auto id = bytes.substr(pos, 4);
        const std::uint32_t len = le(bytes, pos + 4, 4);
        const size_t body = pos + 8;
        const size_t avail = std::min<size_t>(len, bytes.size() - body);
        if (id == "fmt ") {
            if (avail < 16) throw Error(ErrorCode::UnsupportedCodec, "fmt chunk too short");
            format = static_cast<int>(le(bytes, body, 2));
            channels = static_cast<int>(le(bytes, body + 2, 2));
            rate = le(bytes, body + 4, 4);
            bits = static_cast<int>(le(bytes, body + 14, 2));
            if (format == 0xfffe && avail >= 26) format = static_cast<int>(le(bytes, body + 24, 2));
            have_fmt = true;
        } else if (id == "data") {
            data = bytes.substr(body, avail);  // a short final chunk is read as far as it goes
            have_data = true;
        }
        pos = body + len + (len & 1);
    }
    if (!have_fmt) throw Error(ErrorCode::UnsupportedCodec, "missing fmt chunk");
    const bool pcm = format == 1 && (bits == 8 || bits == 16 || bits == 24 || bits == 32);
    const bool flt = format == 3 && (bits == 32 || bits == 64);
    if (!pcm && !flt)
        throw Error(ErrorCode::UnsupportedCodec,
                    "unsupported WAV encoding (format " + std::to_string(format) + ", " + std::to_string(bits) + " bit)");
    if (channels <= 0 || rate == 0) throw Error(ErrorCode::UnsupportedCodec, "invalid channel count or sample rate");

    const size_t frame_bytes = static_cast<size_t>(channels) * static_cast<size_t>(bits / 8);
    const size_t frames = have_data ? data.size() / frame_bytes : 0;
    if (frames == 0) throw Error(ErrorCode::EmptyAudio, "WAV file contains no samples");
    AudioBuffer out;
    out.sample_rate = rate;
    out.samples.resize(frames);
    for (size_t i = 0; i < frames; ++i) {
        double sum = 0.0;
        for (int c = 0; c < channels; ++c)
            sum += sample_at(data, i * frame_bytes + static_cast<size_t>(c) * static_cast<size_t>(bits / 8), format, bits);
        out.samples[i] = std::clamp(sum / channels, -1.0, 1.0);
    }
    return out;
}

AudioBuffer load_wav(std::string_view bytes) { return resample(decode_wav(bytes), kAnalysisRate); }

AudioBuffer load_wav_file(const std::filesystem::path& path) { return load_wav(read_file(path)); }

std::string encode_wav(const AudioBuffer& audio) {
    const auto put = [](std::string& s, std::uint32_t v, int bytes) {
        for (int i = 0; i < bytes; ++i) s += static_cast<char>((v >> (8 * i)) & 0xff);
    };
    const auto rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate));
    const auto data_len = static_cast<std::uint32_t>(audio.samples.size() * 2);
    std::string out = "RIFF";
    put(out, 36 + data_len, 4);
    out += "WAVEfmt ";
    put(out, 16, 4);
    put(out, 1, 2);
    put(out, 1, 2);
    put(out, rate, 4);
    put(out, rate * 2, 4);
    put(out, 2, 2);
    put(out, 16, 2);
    out += "data";
    put(out, data_len, 4);
    for (double x : audio.samples) {
        const long v = std::lround(std::clamp(x, -1.0, 1.0) * 32767.0);
        put(out, static_cast<std::uint32_t>(static_cast<std::uint16_t>(static_cast<std::int16_t>(v))), 2);
    }
    return out;
}

AudioBuffer resample(const AudioBuffer& audio, double target_rate) {
    if (!(target_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "target rate must be positive");
    if (audio.sample_rate == target_rate) return audio;
    const double ratio = target_rate / audio.sample_rate;
    const double cutoff = std::min(1.0, ratio);  // relative to the input Nyquist
    constexpr int kZeroCrossings = 16;
    const double half_width = kZeroCrossings / cutoff;  // in input samples

    const auto in_len = static_cast<long long>(audio.samples.size());
    const auto out_len = static_cast<size_t>(static_cast<double>(in_len) * target_rate / audio.sample_rate + 1e-9);
    AudioBuffer out;
    out.sample_rate = target_rate;
    out.samples.resize(out_len);
    for (size_t i = 0; i < out_len; ++i) {
        const double center = static_cast<double>(i) / ratio;
        const auto lo = std::max<long long>(0, static_cast<long long>(std::ceil(center - half_width)));
        const auto hi = std::min<long long>(in_len - 1, static_cast<long long>(std::floor(center + half_width)));
        double acc = 0.0;
        for (long long n = lo; n <= hi; ++n) {
            const double d = static_cast<double>(n) - center;
            const double window = 0.5 + 0.5 * std::cos(std::numbers::pi * d / half_width);
            acc += audio.samples[static_cast<size_t>(n)] * cutoff * sinc(cutoff * d) * window;
        }
        out.samples[i] = std::clamp(acc, -1.0, 1.0);
    }
    return out;
}

AudioBuffer synthesize(const PerformanceNotes& notes, const SynthOptions& options) {
    double end = 0.0;
    for (const auto& n : notes) end = std::max(end, n.offset_sec);
    AudioBuffer out;
    out.sample_rate = options.sample_rate;
    out.samples.assign(static_cast<size_t>(std::ceil((end + options.tail_sec) * options.sample_rate)), 0.0);
    const double ramp = std::max(1.0, options.ramp_sec * options.sample_rate);
    for (const auto& n : notes) {
        const double f0 = 440.0 * std::pow(2.0, (n.pitch - 69) / 12.0);
        const double amp = options.amplitude * std::clamp(n.velocity, 0, 127) / 127.0;
        const auto first = static_cast<size_t>(std::lround(n.onset_sec * options.sample_rate));
        const auto last = std::min(out.samples.size(), static_cast<size_t>(std::lround(n.offset_sec * options.sample_rate)));
        if (last <= first) continue;
        const double length = static_cast<double>(last - first);
        for (size_t s = first; s < last; ++s) {
            const double k = static_cast<double>(s - first);
            double env = 1.0;
            if (k < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * k / ramp);
            if (length - k < ramp) env = std::min(env, 0.5 - 0.5 * std::cos(std::numbers::pi * (length - k) / ramp));
            const double t = k / options.sample_rate;
            double v = 0.0;
            for (int h = 1; h <= options.harmonics; ++h) {
                if (f0 * h >= options.sample_rate / 2) break;
                v += std::sin(2.0 * std::numbers::pi * f0 * h * t) / h;
            }
            out.samples[s] += amp * env * v;
        }
    }
    for (double& x : out.samples) x = std::clamp(x, -1.0, 1.0);
    return out;
}

}  // namespace muse::dsp
