#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "muse/common/error.hpp"
#include "muse/symbolic/score.hpp"

namespace muse::io {

/// Reads a partwise MusicXML document. Parts become voices named after the
/// part id ("P1"), or "P1.v2" style ids when a part has several voices.
/// Dynamics, articulations and other unsupported markings are reported in
/// `warnings`. Errors: UnsupportedLayout, XmlSyntaxError.
Score parse_musicxml(std::string_view document, Warnings* warnings = nullptr);

/// Extracts the root score document from a compressed .mxl archive.
/// Errors: TruncatedFile, UnsupportedCodec.
std::string extract_mxl(std::string_view archive);

/// Loads .xml/.musicxml or .mxl, sniffing the zip signature.
Score load_musicxml(const std::filesystem::path& path, Warnings* warnings = nullptr);

}  // namespace muse::io
