#ifndef CLOZER_TESTS_HELPERS_HPP_
#define CLOZER_TESTS_HELPERS_HPP_

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "clozer/question_bank.hpp"

namespace testing {

inline const std::filesystem::path kFixtures = CLOZER_FIXTURE_DIR;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("clozer-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& contents) {
  std::ofstream out(p, std::ios::binary);
  out << contents;
}

inline clozer::Question make_question(const std::string& target, const std::string& sentence,
                                      double phi) {
  clozer::Question q;
  q.question_id = target + "@" + sentence;
  q.masked_text = "A sentence with a (____) in it.";
  q.target_word = target;
  q.phi = phi;
  q.gini = phi;
  q.rw = 1.0;
  q.target_rank = 1;
  q.top_candidates = {{target, 0.9}, {"other", 0.05}};
  q.source = {"doc", sentence};
  q.model_name = "tabular:test";
  q.created_at = "2024-01-01T00:00:00Z";
  return q;
}

}  // namespace testing

#endif  // CLOZER_TESTS_HELPERS_HPP_
