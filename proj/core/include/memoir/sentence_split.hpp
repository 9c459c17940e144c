#pragma once

#include <set>
#include <string>
#include <vector>

namespace memoir {

/// Abbreviations shipped with the rule-based segmenter (lowercase, with
/// trailing period). Single initials ("J.") are handled separately.
const std::set<std::string>& default_abbreviations();

/// Rule-based, deterministic sentence segmentation.
///
/// A boundary occurs at terminal punctuation (. ! ?) — optionally followed
/// by closing quotes or brackets — when the next non-space character is a
/// capital letter, or at end of text. A period is not a boundary when the
/// token before it is a known abbreviation or a single initial. Text with
/// no terminal punctuation comes back as one segment.
std::vector<std::string> segment_sentences(
    const std::string& content,
    const std::set<std::string>& abbreviations = default_abbreviations());

} // namespace memoir
