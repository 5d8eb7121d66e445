#pragma once

// Labeled video manifest, caption loading, caption cleaning and filtering,
// and descriptive engagement statistics.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "capsift/matrix.h"

namespace capsift {

enum class Topic {
  VaccinesControversy,
  NineElevenConspiracy,
  ChemtrailConspiracy,
  MoonLanding,
  FlatEarth,
};

enum class ClassLabel : int {
  Debunking = -1,
  Neutral = 0,
  Misinformation = 1,
};

/// Manifest code for a topic: vaccines, 911, chemtrail, moon, flatearth.
std::string_view topic_code(Topic topic);
std::optional<Topic> parse_topic(std::string_view code);
std::optional<ClassLabel> parse_class_label(std::string_view text);

constexpr Label to_label(ClassLabel c) { return static_cast<Label>(c); }

enum class EngagementField { Views, Likes, Dislikes, Comments };

std::string_view field_name(EngagementField field);
std::optional<EngagementField> parse_engagement_field(std::string_view name);

struct VideoRecord {
  std::string video_id;
  Topic topic = Topic::VaccinesControversy;
  ClassLabel label = ClassLabel::Neutral;
  std::string caption_path;
  std::optional<std::uint64_t> views;
  std::optional<std::uint64_t> likes;
  std::optional<std::uint64_t> dislikes;
  std::optional<std::uint64_t> comments;

  std::optional<std::uint64_t> count(EngagementField field) const;

  friend bool operator==(const VideoRecord&, const VideoRecord&) = default;
};

/// Reads a manifest CSV with header
/// `video_id,topic,label,caption_path,views,likes,dislikes,comments`.
/// Throws ParseError (with line number) on malformed rows, unknown topics or
/// labels, and duplicate video ids.
std::vector<VideoRecord> load_manifest(const std::filesystem::path& path);
std::vector<VideoRecord> parse_manifest(std::string_view text, const std::string& source);

std::vector<VideoRecord> filter_by_topic(const std::vector<VideoRecord>& records, Topic topic);

/// Outcome of reading one caption file. A missing file is not fatal: `text`
/// is empty and `skip_reason` says why.
struct CaptionLoad {
  std::optional<std::string> text;
  std::size_t raw_char_count = 0;
  std::string skip_reason;

  bool skipped() const noexcept { return !text.has_value(); }
};

/// Reads record.caption_path relative to captions_root. Throws Error if the
/// root does not exist or the file is not valid UTF-8.
CaptionLoad load_caption(const VideoRecord& record, const std::filesystem::path& captions_root);

/// Number of code points in valid UTF-8 text; nullopt if the text is invalid.
std::optional<std::size_t> utf8_length(std::string_view text);

using StopwordSet = std::unordered_set<std::string>;

/// The bundled English stopword list (also shipped as data/stopwords.txt).
const StopwordSet& default_stopwords();
/// One lowercase word per line; blank lines ignored.
StopwordSet load_stopwords(const std::filesystem::path& path);

struct CleanedCaption {
  std::string cleaned_text;          // ASCII letters and single spaces only
  std::vector<std::string> tokens;   // lowercase, stopwords removed, order kept
  std::size_t tokens_before_removal = 0;
  std::size_t stopword_hits = 0;

  /// stopword tokens / all tokens before removal; 0 for an empty caption.
  double stopword_ratio() const noexcept {
    return tokens_before_removal == 0
               ? 0.0
               : static_cast<double>(stopword_hits) / static_cast<double>(tokens_before_removal);
  }
};

CleanedCaption preprocess_caption(std::string_view raw, const StopwordSet& stopwords);

struct CaptionDocument {
  VideoRecord record;
  std::string raw_text;
  std::string cleaned_text;
  std::vector<std::string> tokens;
  std::size_t raw_char_count = 0;
  double stopword_ratio = 0.0;
};

CaptionDocument make_document(VideoRecord record, std::string raw_text,
                              const StopwordSet& stopwords);

struct FilterParams {
  std::size_t min_raw_chars = 500;
  double min_stopword_ratio = 0.05;
};

struct Rejection {
  std::string video_id;
  std::string reason;
};

struct FilterResult {
  std::vector<CaptionDocument> retained;
  std::vector<Rejection> rejections;
};

/// Drops captions shorter than min_raw_chars (raw code points) and captions
/// whose stopword ratio is below min_stopword_ratio (non-English proxy).
/// Retained documents keep their input order.
FilterResult filter_corpus(std::vector<CaptionDocument> documents, const FilterParams& params = {});

struct BoxplotSummary {
  Topic topic = Topic::VaccinesControversy;
  ClassLabel label = ClassLabel::Neutral;
  EngagementField field = EngagementField::Views;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  std::size_t n = 0;
};

/// Quantile by linear interpolation between order statistics:
/// position h = (n-1)p on the sorted values.
double linear_quantile(std::span<const double> sorted, double p);

/// Five-number summary per (topic, label) group, groups ordered by topic then
/// label. Groups with no value for the field are omitted; throws InputError
/// when no record has the field.
std::vector<BoxplotSummary> descriptive_stats(const std::vector<VideoRecord>& records,
                                              EngagementField field);

}  // namespace capsift
