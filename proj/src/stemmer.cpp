// English Snowball stemmer (Porter2, current revision with the extended
// prefix list and the "-ing" special cases).

#include <algorithm>
#include <array>
#include <string>
#include <string_view>

#include "clozer/grading.hpp"

namespace clozer {
namespace {

bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

bool is_valid_li(char c) {
  return std::string_view("cdeghkmnrt").find(c) != std::string_view::npos;
}

bool is_double(std::string_view s) {
  static constexpr std::array<std::string_view, 9> kDoubles = {
      "bb", "dd", "ff", "gg", "mm", "nn", "pp", "rr", "tt"};
  return std::find(kDoubles.begin(), kDoubles.end(), s) != kDoubles.end();
}

struct Exception {
  std::string_view word;
  std::string_view stem;
};

constexpr std::array<Exception, 15> kExceptions = {{
    {"andes", "andes"}, {"atlas", "atlas"}, {"bias", "bias"},
    {"cosmos", "cosmos"}, {"early", "earli"}, {"gently", "gentl"},
    {"howe", "howe"}, {"idly", "idl"}, {"news", "news"}, {"only", "onli"},
    {"singly", "singl"}, {"skies", "sky"}, {"skis", "ski"}, {"sky", "sky"},
    {"ugly", "ugli"},
}};

constexpr std::array<std::string_view, 9> kRegionPrefixes = {
    "arsen", "commun", "emerg", "gener", "inter", "later", "organ", "past",
    "univers"};

class Stemmer {
 public:
  explicit Stemmer(std::string_view word) : w_(word) {}

  std::string run() {
    prelude();
    mark_regions();
    step_1a();
    step_1b();
    step_1c();
    step_2();
    step_3();
    step_4();
    step_5();
    std::replace(w_.begin(), w_.end(), 'Y', 'y');
    return w_;
  }

 private:
  bool ends_with(std::string_view suffix) const {
    return w_.size() >= suffix.size() &&
           std::string_view(w_).substr(w_.size() - suffix.size()) == suffix;
  }

  // Longest suffix from `options` that the word ends with, or empty.
  template <std::size_t N>
  std::string_view longest_suffix(const std::array<std::string_view, N>& options) const {
    std::string_view best;
    for (std::string_view s : options) {
      if (s.size() > best.size() && ends_with(s)) best = s;
    }
    return best;
  }

  void replace_suffix(std::size_t len, std::string_view with) {
    w_.replace(w_.size() - len, len, with);
  }

  bool in_r1(std::size_t pos) const { return pos >= p1_; }
  bool in_r2(std::size_t pos) const { return pos >= p2_; }

  bool has_vowel_before(std::size_t end) const {
    return std::any_of(w_.begin(), w_.begin() + static_cast<std::ptrdiff_t>(end), is_vowel);
  }

  // Does w_[0, end) end in a short syllable?
  bool short_syllable_before(std::size_t end) const {
    if (end >= 3 && !is_vowel(w_[end - 1]) && w_[end - 1] != 'w' &&
        w_[end - 1] != 'x' && w_[end - 1] != 'Y' && is_vowel(w_[end - 2]) &&
        !is_vowel(w_[end - 3])) {
      return true;
    }
    if (end == 2 && is_vowel(w_[0]) && !is_vowel(w_[1])) return true;
    return std::string_view(w_).substr(0, end).ends_with("past");
  }

  void prelude() {
    if (!w_.empty() && w_[0] == '\'') w_.erase(0, 1);
    if (!w_.empty() && w_[0] == 'y') w_[0] = 'Y';
    for (std::size_t i = 1; i < w_.size(); ++i) {
      if (w_[i] == 'y' && is_vowel(w_[i - 1])) w_[i] = 'Y';
    }
  }

  // Position just past the first non-vowel that follows a vowel, searching
  // from `from`; the word length if there is none.
  std::size_t region_after(std::size_t from) const {
    for (std::size_t i = from + 1; i < w_.size(); ++i) {
      if (!is_vowel(w_[i]) && is_vowel(w_[i - 1])) return i + 1;
    }
    return w_.size();
  }

  void mark_regions() {
    const auto prefix =
        std::find_if(kRegionPrefixes.begin(), kRegionPrefixes.end(),
                     [&](std::string_view p) { return std::string_view(w_).starts_with(p); });
    p1_ = prefix != kRegionPrefixes.end() ? prefix->size() : region_after(0);
    p2_ = p1_ >= w_.size() ? w_.size() : region_after(p1_);
  }

  void step_1a() {
    if (ends_with("'s'")) {
      replace_suffix(3, "");
    } else if (ends_with("'s")) {
      replace_suffix(2, "");
    } else if (ends_with("'")) {
      replace_suffix(1, "");
    }

    if (ends_with("sses")) {
      replace_suffix(4, "ss");
    } else if (ends_with("ied") || ends_with("ies")) {
      replace_suffix(3, w_.size() > 4 ? "i" : "ie");
    } else if (ends_with("ss") || ends_with("us")) {
      // unchanged
    } else if (ends_with("s")) {
      // Needs a vowel somewhere before the letter preceding the s.
      const std::size_t s_at = w_.size() - 1;
      if (s_at >= 1 && has_vowel_before(s_at - 1)) replace_suffix(1, "");
    }
  }

  void step_1b() {
    static constexpr std::array<std::string_view, 6> kSuffixes = {
        "ed", "eed", "ing", "edly", "eedly", "ingly"};
    const std::string_view suffix = longest_suffix(kSuffixes);
    if (suffix.empty()) return;
    const std::size_t at = w_.size() - suffix.size();

    if (suffix == "eed" || suffix == "eedly") {
      if (!in_r1(at)) return;
      const std::string_view stem = std::string_view(w_).substr(0, at);
      if (stem == "succ" || stem == "proc" || stem == "exc") return;
      replace_suffix(suffix.size(), "ee");
      return;
    }

    if (suffix == "ing") {
      const std::string_view stem = std::string_view(w_).substr(0, at);
      if (stem == "even" || stem == "cann" || stem == "inn" || stem == "earr" ||
          stem == "herr" || stem == "out") {
        return;
      }
      // dying -> die, lying -> lie
      if (stem.size() == 2 && stem[1] == 'y' && !is_vowel(stem[0])) {
        w_ = std::string(1, stem[0]) + "ie";
        return;
      }
    }

    if (!has_vowel_before(at)) return;
    w_.erase(at);

    if (ends_with("at") || ends_with("bl") || ends_with("iz")) {
      w_ += 'e';
    } else if (w_.size() >= 2 && is_double(std::string_view(w_).substr(w_.size() - 2))) {
      // Keep "add", "egg", "off"-like stems intact.
      const bool aeo_start =
          w_.size() == 3 && std::string_view("aeo").find(w_[0]) != std::string_view::npos;
      if (!aeo_start) w_.pop_back();
    } else if (p1_ == w_.size() && short_syllable_before(w_.size())) {
      w_ += 'e';
    }
  }

  void step_1c() {
    if (w_.size() < 3) return;
    const char last = w_.back();
    if (last != 'y' && last != 'Y') return;
    if (!is_vowel(w_[w_.size() - 2])) w_.back() = 'i';
  }

  void step_2() {
    static constexpr std::array<std::string_view, 25> kSuffixes = {
        "anci",  "enci",   "ogi",    "li",      "bli",     "abli",   "alli",
        "fulli", "lessli", "ousli",  "entli",   "aliti",   "biliti", "iviti",
        "tional", "ational", "alism", "ation",  "ization", "izer",   "ator",
        "iveness", "fulness", "ousness", "ogist"};
    const std::string_view suffix = longest_suffix(kSuffixes);
    if (suffix.empty()) return;
    const std::size_t at = w_.size() - suffix.size();
    if (!in_r1(at)) return;

    std::string_view with;
    if (suffix == "tional") with = "tion";
    else if (suffix == "enci") with = "ence";
    else if (suffix == "anci") with = "ance";
    else if (suffix == "abli") with = "able";
    else if (suffix == "entli") with = "ent";
    else if (suffix == "izer" || suffix == "ization") with = "ize";
    else if (suffix == "ational" || suffix == "ation" || suffix == "ator") with = "ate";
    else if (suffix == "alism" || suffix == "aliti" || suffix == "alli") with = "al";
    else if (suffix == "fulness" || suffix == "fulli") with = "ful";
    else if (suffix == "ousli" || suffix == "ousness") with = "ous";
    else if (suffix == "iveness" || suffix == "iviti") with = "ive";
    else if (suffix == "biliti" || suffix == "bli") with = "ble";
    else if (suffix == "ogist") with = "og";
    else if (suffix == "ogi") {
      if (at == 0 || w_[at - 1] != 'l') return;
      with = "og";
    } else if (suffix == "lessli") with = "less";
    else {  // li
      if (at == 0 || !is_valid_li(w_[at - 1])) return;
      with = "";
    }
    replace_suffix(suffix.size(), with);
  }

  void step_3() {
    static constexpr std::array<std::string_view, 9> kSuffixes = {
        "icate", "ative", "alize", "iciti", "ical", "tional", "ational", "ful", "ness"};
    const std::string_view suffix = longest_suffix(kSuffixes);
    if (suffix.empty()) return;
    const std::size_t at = w_.size() - suffix.size();
    if (!in_r1(at)) return;

    if (suffix == "tional") replace_suffix(6, "tion");
    else if (suffix == "ational") replace_suffix(7, "ate");
    else if (suffix == "alize") replace_suffix(5, "al");
    else if (suffix == "icate" || suffix == "iciti" || suffix == "ical") {
      replace_suffix(suffix.size(), "ic");
    } else if (suffix == "ful" || suffix == "ness") {
      replace_suffix(suffix.size(), "");
    } else if (in_r2(at)) {  // ative
      replace_suffix(suffix.size(), "");
    }
  }

  void step_4() {
    static constexpr std::array<std::string_view, 18> kSuffixes = {
        "ic",  "ance", "ence", "able", "ible", "ate", "ive", "ize",  "iti",
        "al",  "ism",  "ion",  "er",   "ous",  "ant", "ent", "ment", "ement"};
    const std::string_view suffix = longest_suffix(kSuffixes);
    if (suffix.empty()) return;
    const std::size_t at = w_.size() - suffix.size();
    if (!in_r2(at)) return;
    if (suffix == "ion" && (at == 0 || (w_[at - 1] != 's' && w_[at - 1] != 't'))) return;
    replace_suffix(suffix.size(), "");
  }

  void step_5() {
    if (w_.empty()) return;
    const std::size_t at = w_.size() - 1;
    if (w_.back() == 'e') {
      if (in_r2(at) || (in_r1(at) && !short_syllable_before(at))) w_.pop_back();
    } else if (w_.back() == 'l') {
      if (in_r2(at) && at > 0 && w_[at - 1] == 'l') w_.pop_back();
    }
  }

  std::string w_;
  std::size_t p1_ = 0;
  std::size_t p2_ = 0;
};

}  // namespace

std::string stem(std::string_view word) {
  for (const Exception& e : kExceptions) {
    if (e.word == word) return std::string(e.stem);
  }
  if (word.size() < 3) return std::string(word);
  return Stemmer(word).run();
}

}  // namespace clozer
