#include <cmath>
#include <cstring>
#include <numbers>

#include "doctest.h"
#include "muse/dsp/audio.hpp"

using namespace muse;
using namespace muse::dsp;

namespace {

void put(std::string& s, std::uint32_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) s += static_cast<char>((v >> (8 * i)) & 0xff);
}

// Minimal WAV writer independent of encode_wav.
std::string wav(int format, int channels, int rate, int bits, const std::string& data) {
    std::string out = "RIFF";
    put(out, static_cast<std::uint32_t>(36 + data.size()), 4);
    out += "WAVEfmt ";
    put(out, 16, 4);
    put(out, static_cast<std::uint32_t>(format), 2);
    put(out, static_cast<std::uint32_t>(channels), 2);
    put(out, static_cast<std::uint32_t>(rate), 4);
    put(out, static_cast<std::uint32_t>(rate * channels * bits / 8), 4);
    put(out, static_cast<std::uint32_t>(channels * bits / 8), 2);
    put(out, static_cast<std::uint32_t>(bits), 2);
    out += "data";
    put(out, static_cast<std::uint32_t>(data.size()), 4);
    return out + data;
}

std::string pcm16(const std::vector<int>& values) {
    std::string s;
    for (int v : values) put(s, static_cast<std::uint32_t>(static_cast<std::uint16_t>(static_cast<std::int16_t>(v))), 2);
    return s;
}

}  // namespace

TEST_CASE("wav: one second of 44.1 kHz silence becomes 16000 zeros") {
    const auto audio = load_wav(wav(1, 1, 44100, 16, pcm16(std::vector<int>(44100, 0))));
    CHECK(audio.sample_rate == 16000.0);
    REQUIRE(audio.samples.size() == 16000);
    for (double x : audio.samples) CHECK(x == 0.0);
}

TEST_CASE("wav: full-scale square wave peaks at one") {
    std::vector<int> square;
    for (int i = 0; i < 16000; ++i) square.push_back((i / 40) % 2 ? -32768 : 32767);
    const auto audio = load_wav(wav(1, 1, 16000, 16, pcm16(square)));
    double peak = 0.0;
    for (double x : audio.samples) peak = std::max(peak, std::abs(x));
    CHECK(peak == doctest::Approx(1.0).epsilon(1.0 / 32768));
    CHECK(peak <= 1.0);
}

TEST_CASE("wav: opposite stereo channels cancel") {
    std::vector<int> stereo;
    for (int i = 0; i < 1000; ++i) {
        const int x = static_cast<int>(10000 * std::sin(i * 0.1));
        stereo.push_back(x);
        stereo.push_back(-x);
    }
    const auto audio = load_wav(wav(1, 2, 16000, 16, pcm16(stereo)));
    REQUIRE(audio.samples.size() == 1000);
    for (double x : audio.samples) CHECK(x == 0.0);
}

TEST_CASE("wav: 8, 24-bit and float encodings") {
    std::string d8 = {static_cast<char>(128), static_cast<char>(255), static_cast<char>(0)};
    const auto a8 = decode_wav(wav(1, 1, 8000, 8, d8));
    CHECK(a8.samples[0] == 0.0);
    CHECK(a8.samples[1] == doctest::Approx(127.0 / 128));
    CHECK(a8.samples[2] == -1.0);

    std::string d24;
    put(d24, 0x400000, 3);  // +0.5
    put(d24, 0xc00000, 3);  // -0.5
    const auto a24 = decode_wav(wav(1, 1, 8000, 24, d24));
    CHECK(a24.samples[0] == 0.5);
    CHECK(a24.samples[1] == -0.5);

    std::string df;
    const float values[] = {0.25f, -0.75f};
    for (float f : values) {
        std::uint32_t raw;
        std::memcpy(&raw, &f, 4);
        put(df, raw, 4);
    }
    const auto af = decode_wav(wav(3, 1, 8000, 32, df));
    CHECK(af.samples[0] == 0.25);
    CHECK(af.samples[1] == -0.75);
}

TEST_CASE("wav: errors") {
    try {
        decode_wav("not audio at all");
        FAIL("expected UnsupportedCodec");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnsupportedCodec);
    }
    try {
        decode_wav(wav(2, 1, 8000, 4, "abcd"));  // ADPCM
        FAIL("expected UnsupportedCodec");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnsupportedCodec);
    }
    try {
        decode_wav(wav(1, 1, 8000, 16, ""));
        FAIL("expected EmptyAudio");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyAudio);
    }
}

TEST_CASE("wav: encode then decode") {
    AudioBuffer a;
    a.sample_rate = 16000;
    for (int i = 0; i < 500; ++i) a.samples.push_back(0.5 * std::sin(i * 0.05));
    const auto b = decode_wav(encode_wav(a));
    REQUIRE(b.samples.size() == a.samples.size());
    for (size_t i = 0; i < a.samples.size(); ++i) CHECK(b.samples[i] == doctest::Approx(a.samples[i]).epsilon(1e-4));
}

TEST_CASE("resample: a tone keeps its frequency and level") {
    AudioBuffer a;
    a.sample_rate = 44100;
    for (int i = 0; i < 44100; ++i) a.samples.push_back(0.5 * std::sin(2 * std::numbers::pi * 440.0 * i / 44100.0));
    const auto b = resample(a, 16000);
    REQUIRE(b.samples.size() == 16000);
    double worst = 0.0;
    for (size_t i = 1000; i < 15000; ++i) {
        const double expected = 0.5 * std::sin(2 * std::numbers::pi * 440.0 * static_cast<double>(i) / 16000.0);
        worst = std::max(worst, std::abs(b.samples[i] - expected));
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("resample: content above the new Nyquist is removed") {
    AudioBuffer a;
    a.sample_rate = 44100;
    for (int i = 0; i < 44100; ++i) a.samples.push_back(0.5 * std::sin(2 * std::numbers::pi * 12000.0 * i / 44100.0));
    const auto b = resample(a, 16000);
    double peak = 0.0;
    for (size_t i = 1000; i < 15000; ++i) peak = std::max(peak, std::abs(b.samples[i]));
    CHECK(peak < 0.01);
}

TEST_CASE("synthesize: notes land where requested") {
    const auto audio = synthesize({{69, 0.5, 1.0, 127}}, {});
    CHECK(audio.samples.size() == static_cast<size_t>(std::ceil(1.25 * 16000)));
    for (size_t i = 0; i < 8000; ++i) CHECK(audio.samples[i] == 0.0);
    double peak = 0.0;
    for (size_t i = 8000; i < 16000; ++i) peak = std::max(peak, std::abs(audio.samples[i]));
    CHECK(peak == doctest::Approx(0.25).epsilon(0.01));
    for (size_t i = 16000; i < audio.samples.size(); ++i) CHECK(audio.samples[i] == 0.0);
}
