#include "capsift/corpus.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "capsift/error.h"

namespace capsift {

namespace detail {
extern const std::string_view kDefaultStopwordsText;
}

namespace {

constexpr std::string_view kManifestHeader =
    "video_id,topic,label,caption_path,views,likes,dislikes,comments";

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::optional<std::uint64_t> parse_count(std::string_view cell, const std::string& source,
                                         std::size_t line, std::string_view column) {
  if (cell.empty()) return std::nullopt;
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError(source, line,
                     "column '" + std::string(column) + "' is not a nonnegative integer: '" +
                         std::string(cell) + "'");
  }
  return value;
}

bool is_ascii_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

StopwordSet parse_stopwords(std::string_view text) {
  StopwordSet words;
  for (std::string_view line : split(text, '\n')) {
    line = trim(line);
    if (!line.empty()) words.emplace(line);
  }
  return words;
}

}  // namespace

std::string_view topic_code(Topic topic) {
  switch (topic) {
    case Topic::VaccinesControversy: return "vaccines";
    case Topic::NineElevenConspiracy: return "911";
    case Topic::ChemtrailConspiracy: return "chemtrail";
    case Topic::MoonLanding: return "moon";
    case Topic::FlatEarth: return "flatearth";
  }
  return "unknown";
}

std::optional<Topic> parse_topic(std::string_view code) {
  for (Topic t : {Topic::VaccinesControversy, Topic::NineElevenConspiracy,
                  Topic::ChemtrailConspiracy, Topic::MoonLanding, Topic::FlatEarth}) {
    if (topic_code(t) == code) return t;
  }
  return std::nullopt;
}

std::optional<ClassLabel> parse_class_label(std::string_view text) {
  if (text == "1") return ClassLabel::Misinformation;
  if (text == "0") return ClassLabel::Neutral;
  if (text == "-1") return ClassLabel::Debunking;
  return std::nullopt;
}

std::string_view field_name(EngagementField field) {
  switch (field) {
    case EngagementField::Views: return "views";
    case EngagementField::Likes: return "likes";
    case EngagementField::Dislikes: return "dislikes";
    case EngagementField::Comments: return "comments";
  }
  return "unknown";
}

std::optional<EngagementField> parse_engagement_field(std::string_view name) {
  for (EngagementField f : {EngagementField::Views, EngagementField::Likes,
                            EngagementField::Dislikes, EngagementField::Comments}) {
    if (field_name(f) == name) return f;
  }
  return std::nullopt;
}

std::optional<std::uint64_t> VideoRecord::count(EngagementField field) const {
  switch (field) {
    case EngagementField::Views: return views;
    case EngagementField::Likes: return likes;
    case EngagementField::Dislikes: return dislikes;
    case EngagementField::Comments: return comments;
  }
  return std::nullopt;
}

std::vector<VideoRecord> parse_manifest(std::string_view text, const std::string& source) {
  std::vector<VideoRecord> records;
  std::unordered_set<std::string> seen_ids;
  const auto lines = split(text, '\n');
  bool have_header = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    std::string_view line = trim(lines[i]);
    if (!have_header) {
      if (line.size() >= 3 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
      if (line != kManifestHeader) {
        throw ParseError(source, line_no,
                         "expected header '" + std::string(kManifestHeader) + "'");
      }
      have_header = true;
      continue;
    }
    if (line.empty()) continue;

    auto cells = split(line, ',');
    if (cells.size() != 8) {
      throw ParseError(source, line_no,
                       "expected 8 columns, found " + std::to_string(cells.size()));
    }
    for (auto& c : cells) c = trim(c);

    VideoRecord r;
    if (cells[0].empty()) throw ParseError(source, line_no, "empty video_id");
    r.video_id = std::string(cells[0]);
    const auto topic = parse_topic(cells[1]);
    if (!topic) throw ParseError(source, line_no, "unknown topic '" + std::string(cells[1]) + "'");
    r.topic = *topic;
    const auto label = parse_class_label(cells[2]);
    if (!label) throw ParseError(source, line_no, "unknown label '" + std::string(cells[2]) + "'");
    r.label = *label;
    if (cells[3].empty()) throw ParseError(source, line_no, "empty caption_path");
    r.caption_path = std::string(cells[3]);
    r.views = parse_count(cells[4], source, line_no, "views");
    r.likes = parse_count(cells[5], source, line_no, "likes");
    r.dislikes = parse_count(cells[6], source, line_no, "dislikes");
    r.comments = parse_count(cells[7], source, line_no, "comments");

    if (!seen_ids.insert(r.video_id).second) {
      throw ParseError(source, line_no, "duplicate video_id '" + r.video_id + "'");
    }
    records.push_back(std::move(r));
  }
  if (!have_header) throw ParseError(source, 1, "missing header row");
  return records;
}

std::vector<VideoRecord> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open manifest '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), path.string());
}

std::vector<VideoRecord> filter_by_topic(const std::vector<VideoRecord>& records, Topic topic) {
  std::vector<VideoRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [topic](const VideoRecord& r) { return r.topic == topic; });
  return out;
}

std::optional<std::size_t> utf8_length(std::string_view text) {
  std::size_t count = 0;
  std::size_t i = 0;
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(text[k]); };
  while (i < text.size()) {
    const unsigned char c = byte(i);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return std::nullopt;
    }
    if (i + extra >= text.size()) return std::nullopt;
    for (std::size_t k = 1; k <= extra; ++k) {
      const unsigned char cc = byte(i + k);
      if ((cc & 0xC0) != 0x80) return std::nullopt;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong encodings, surrogates and out-of-range code points.
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) ||
        (extra == 3 && (cp < 0x10000 || cp > 0x10FFFF)) || (cp >= 0xD800 && cp <= 0xDFFF)) {
      return std::nullopt;
    }
    i += extra + 1;
    ++count;
  }
  return count;
}

CaptionLoad load_caption(const VideoRecord& record, const std::filesystem::path& captions_root) {
  if (!std::filesystem::is_directory(captions_root)) {
    throw Error("captions root '" + captions_root.string() + "' is not a directory");
  }
  const std::filesystem::path file = captions_root / record.caption_path;
  CaptionLoad out;
  std::error_code ec;
  if (!std::filesystem::is_regular_file(file, ec)) {
    out.skip_reason = "caption file missing: " + file.string();
    return out;
  }
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    out.skip_reason = "caption file unreadable: " + file.string();
    return out;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  const auto length = utf8_length(text);
  if (!length) throw Error("caption file '" + file.string() + "' is not valid UTF-8");
  out.raw_char_count = *length;
  out.text = std::move(text);
  return out;
}

const StopwordSet& default_stopwords() {
  static const StopwordSet words = parse_stopwords(detail::kDefaultStopwordsText);
  return words;
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open stopword file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_stopwords(buf.str());
}

CleanedCaption preprocess_caption(std::string_view raw, const StopwordSet& stopwords) {
  CleanedCaption out;
  out.cleaned_text.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (is_ascii_alpha(c)) {
      if (pending_space && !out.cleaned_text.empty()) out.cleaned_text.push_back(' ');
      pending_space = false;
      out.cleaned_text.push_back(c);
    } else {
      pending_space = true;
    }
  }

  std::string token;
  const auto flush = [&] {
    if (token.empty()) return;
    ++out.tokens_before_removal;
    if (stopwords.contains(token)) {
      ++out.stopword_hits;
    } else {
      out.tokens.push_back(token);
    }
    token.clear();
  };
  for (char c : out.cleaned_text) {
    if (c == ' ') {
      flush();
    } else {
      token.push_back(ascii_lower(c));
    }
  }
  flush();
  return out;
}

CaptionDocument make_document(VideoRecord record, std::string raw_text,
                              const StopwordSet& stopwords) {
  CaptionDocument doc;
  auto cleaned = preprocess_caption(raw_text, stopwords);
  const auto length = utf8_length(raw_text);
  doc.raw_char_count = length ? *length : raw_text.size();
  doc.stopword_ratio = cleaned.stopword_ratio();
  doc.cleaned_text = std::move(cleaned.cleaned_text);
  doc.tokens = std::move(cleaned.tokens);
  doc.raw_text = std::move(raw_text);
  doc.record = std::move(record);
  return doc;
}

FilterResult filter_corpus(std::vector<CaptionDocument> documents, const FilterParams& params) {
  FilterResult out;
  for (auto& doc : documents) {
    if (doc.raw_char_count < params.min_raw_chars) {
      out.rejections.push_back(
          {doc.record.video_id, "caption too short: " + std::to_string(doc.raw_char_count) +
                                    " < " + std::to_string(params.min_raw_chars) + " characters"});
    } else if (doc.stopword_ratio < params.min_stopword_ratio) {
      std::ostringstream reason;
      reason << "not English-like: stopword ratio " << doc.stopword_ratio << " < "
             << params.min_stopword_ratio;
      out.rejections.push_back({doc.record.video_id, reason.str()});
    } else {
      out.retained.push_back(std::move(doc));
    }
  }
  return out;
}

double linear_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InputError("quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::vector<BoxplotSummary> descriptive_stats(const std::vector<VideoRecord>& records,
                                              EngagementField field) {
  std::map<std::pair<int, int>, std::vector<double>> groups;
  for (const auto& r : records) {
    const auto v = r.count(field);
    if (!v) continue;
    groups[{static_cast<int>(r.topic), static_cast<int>(r.label)}].push_back(
        static_cast<double>(*v));
  }
  if (groups.empty()) {
    throw InputError("no record has a value for field '" + std::string(field_name(field)) + "'");
  }
  std::vector<BoxplotSummary> out;
  for (auto& [key, values] : groups) {
    std::sort(values.begin(), values.end());
    BoxplotSummary s;
    s.topic = static_cast<Topic>(key.first);
    s.label = static_cast<ClassLabel>(key.second);
    s.field = field;
    s.n = values.size();
    s.min = values.front();
    s.max = values.back();
    s.q1 = linear_quantile(values, 0.25);
    s.median = linear_quantile(values, 0.5);
    s.q3 = linear_quantile(values, 0.75);
    out.push_back(s);
  }
  return out;
}

}  // namespace capsift
