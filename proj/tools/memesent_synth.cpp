// Copyright 2026 The Memesent Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// memesent-synth - generates the synthetic bimodal demo dataset (images +
// manifest.tsv). The class is decidable only from the combination of the
// image pattern and the caption keyword, which makes it a quick check that
// fusion beats both unimodal models.

#include <CLI11.hpp>

#include <iostream>

#include "memesent/synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"synthetic bimodal meme dataset generator"};
    std::string out;
    memesent::SyntheticConfig config;
    app.add_option("--out", out, "Output directory")->required();
    app.add_option("--per-class", config.per_class, "Samples per class")->capture_default_str();
    app.add_option("--size", config.image_size, "Square image edge in pixels")->capture_default_str();
    app.add_option("--seed", config.seed, "Generation seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const std::string manifest = memesent::generate_bimodal_dataset(out, config);
        std::cout << manifest << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
