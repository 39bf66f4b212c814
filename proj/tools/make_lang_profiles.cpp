// Builds data/langprofiles/<code>.tsv from data/langtrain/<code>.txt.
#include <filesystem>
#include <iostream>

#include "citescope/language.hpp"
#include "citescope/tsv.hpp"

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: make_lang_profiles TRAIN_DIR OUT_DIR\n";
        return 1;
    }
    const std::filesystem::path train = argv[1], out = argv[2];
    try {
        for (const auto& entry : std::filesystem::directory_iterator(train)) {
            if (entry.path().extension() != ".txt") continue;
            const auto code = entry.path().stem().string();
            const auto profile = citescope::build_profile(code, citescope::read_file(entry.path()));
            citescope::write_profile(profile, out / (code + ".tsv"));
            std::cout << code << ": " << profile.counts.size() << " trigrams\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
