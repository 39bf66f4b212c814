#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace citescope {

struct LanguageTag {
    std::string code;  // ISO-639-1, or "und"
    double confidence = 0.0;
};

// Trigram frequency table for one language.
struct LanguageProfile {
    std::string code;
    std::unordered_map<std::u32string, double> counts;
    double total = 0.0;
};

// Word-boundary padded character trigrams of a lower-cased title.
std::vector<std::u32string> title_trigrams(std::string_view title);
std::size_t title_token_count(std::string_view title);

// Builds a profile from training text using the same trigram extraction
// as classification.
LanguageProfile build_profile(std::string code, std::string_view training_text);

// Naive-Bayes style trigram classifier. Titles written mostly in CJK
// scripts skip the profiles and are tagged by Unicode block majority
// (Han -> zh, kana -> ja, Hangul -> ko).
class LanguageDetector {
public:
    explicit LanguageDetector(std::vector<LanguageProfile> profiles);

    // Loads every "<code>.tsv" (trigram<TAB>count) file in the directory.
    static LanguageDetector from_directory(const std::filesystem::path& dir);

    // Profiles shipped with the project. CITESCOPE_LANG_PROFILES overrides
    // the directory.
    static const LanguageDetector& bundled();

    // Throws DataError on an empty title.
    LanguageTag detect(std::string_view title) const;

    std::vector<std::string> codes() const;

private:
    std::vector<LanguageProfile> profiles_;
    double vocabulary_ = 1.0;
};

std::filesystem::path bundled_profile_dir();

LanguageTag detect_language(std::string_view title);

// Share of each detected language code (including "und") over the titles.
std::map<std::string, double> language_shares(const std::vector<std::string>& titles,
                                              const LanguageDetector& detector = LanguageDetector::bundled());

void write_profile(const LanguageProfile& profile, const std::filesystem::path& path);

}  // namespace citescope
