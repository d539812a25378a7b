// Copyright 2026 The stresslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Keyword captions: transcripts are reduced to the game words they contain.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "stresslab/error.hpp"
#include "stresslab/markers.hpp"
#include "stresslab/stream_sync.hpp"

namespace stresslab::keywords {

struct TranscriptEvent {
  double timestamp_s = 0.0;
  std::string text;
};

struct CaptionEvent {
  double timestamp_s = 0.0;
  std::vector<std::string> words;  // utterance order, duplicates kept

  bool operator==(const CaptionEvent&) const = default;
};

inline bool is_ascii_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

inline char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

/// Set of lowercase keywords.
class KeywordDictionary {
 public:
  KeywordDictionary() = default;

  explicit KeywordDictionary(std::vector<std::string> words) : words_(std::move(words)) {
    for (const auto& w : words_) {
      if (w.empty()) fail(Errc::BadParameter, "empty keyword");
      for (char c : w)
        if (!is_ascii_alnum(c) || ascii_lower(c) != c)
          fail(Errc::BadParameter, "keyword '" + w + "' must be lowercase alphanumeric");
    }
    sorted_ = words_;
    std::sort(sorted_.begin(), sorted_.end());
    if (std::adjacent_find(sorted_.begin(), sorted_.end()) != sorted_.end())
      fail(Errc::BadParameter, "duplicate keyword");
  }

  bool contains(std::string_view w) const {
    return std::binary_search(sorted_.begin(), sorted_.end(), w);
  }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::vector<std::string> sorted_;
};

inline KeywordDictionary default_dictionary() {
  return KeywordDictionary({"red", "blue", "white", "yellow", "black", "green", "wire",
                            "button", "keypad", "symbol", "gas", "cut", "press", "hold",
                            "release", "first", "second", "third", "fourth", "last"});
}

/// One keyword per line; blank lines and lines starting with '#' are skipped.
inline KeywordDictionary load_dictionary(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(Errc::IoError, "cannot open '" + path.string() + "'");
  std::vector<std::string> words;
  std::string line;
  while (std::getline(is, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    words.push_back(line);
  }
  return KeywordDictionary(std::move(words));
}

/// Splits on anything that is not an ASCII letter or digit, lowercases each
/// token and keeps the ones in the dictionary, in order.
inline std::vector<std::string> filter_text(const KeywordDictionary& dict, std::string_view text) {
  std::vector<std::string> out;
  std::string token;
  auto flush = [&] {
    if (!token.empty() && dict.contains(token)) out.push_back(token);
    token.clear();
  };
  for (char c : text) {
    if (is_ascii_alnum(c)) {
      token.push_back(ascii_lower(c));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

inline std::optional<CaptionEvent> caption_for(const KeywordDictionary& dict,
                                               const TranscriptEvent& ev) {
  auto words = filter_text(dict, ev.text);
  if (words.empty()) return std::nullopt;
  return CaptionEvent{ev.timestamp_s, std::move(words)};
}

/// Filters each utterance and pushes one caption:<word> marker per matched
/// word at the utterance timestamp. When a transcript outlet is given the raw
/// text is recorded there too. Returns the captions produced.
inline std::vector<CaptionEvent> attach(const KeywordDictionary& dict,
                                        std::span<const TranscriptEvent> transcript,
                                        Outlet& markers, Outlet* transcript_outlet = nullptr) {
  std::vector<CaptionEvent> out;
  for (const auto& ev : transcript) {
    if (transcript_outlet) transcript_outlet->push_marker(ev.text, ev.timestamp_s);
    auto caption = caption_for(dict, ev);
    if (!caption) continue;
    for (const auto& w : caption->words) markers.push_marker(marker::Caption{w}, ev.timestamp_s);
    out.push_back(std::move(*caption));
  }
  return out;
}

/// Transcript file: one {"timestamp_s": ..., "text": ...} object per line.
inline std::vector<TranscriptEvent> load_transcript(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(Errc::IoError, "cannot open '" + path.string() + "'");
  std::vector<TranscriptEvent> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TranscriptEvent ev{j.at("timestamp_s").get<double>(), j.at("text").get<std::string>()};
      if (ev.text.empty()) fail(Errc::ParseError, "line " + std::to_string(lineno) + ": empty text");
      out.push_back(std::move(ev));
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::ParseError, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.timestamp_s < b.timestamp_s;
  });
  return out;
}

}  // namespace stresslab::keywords
