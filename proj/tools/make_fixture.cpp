// Regenerates the bundled toy de/hsb fixture under the given directory:
//   make_fixture data/fixture
// Everything is derived from fixed seeds, so the output is byte-stable.

#include <augmt/augment.hpp>
#include <augmt/io.hpp>
#include <augmt/synthetic.hpp>
#include <augmt/tm.hpp>

#include <filesystem>
#include <iostream>

using namespace augmt;

int main(int argc, char **argv) {
    if (argc != 2 || argv[1][0] == '-') {
        std::cerr << "usage: make_fixture OUT_DIR\n";
        return kExitValidation;
    }
    const std::filesystem::path dir(argv[1]);
    std::filesystem::create_directories(dir);
    const auto at = [&](const std::string &name) { return (dir / name).string(); };

    const synthetic::ToyLanguagePair lp;
    const synthetic::ToyEncoder enc;

    const auto bi = lp.bilingual(500, 11);
    write_corpus(bi, at("bi.de"), at("bi.hsb"));
    const auto bi_src = bi.source_side();
    write_embeddings(at("bi.de.aemb"), enc.encode_all(bi_src.sentences));
    write_embedding_sidecar(at("bi.de.aemb"), "bi.de", "toy-bow-16", "");

    const auto mono = lp.monolingual(2000, 12, &bi, 0.3);
    write_mono(at("mono.de"), mono);
    const auto mono_emb = enc.encode_all(mono.sentences);
    write_embeddings(at("mono.de.aemb"), mono_emb);
    write_embedding_sidecar(at("mono.de.aemb"), "mono.de", "toy-bow-16", "");

    // Stand-in for the external generator: noisy word-by-word translation of exactly the
    // sentences domain selection will pick.
    const auto sel = domain_select(enc.encode_all(bi_src.sentences), mono, VectorIndex(mono_emb), false);
    Engine eng(13);
    MonoCorpus translations{"hsb", {}};
    for (const auto &s : sel.corpus.sentences)
        translations.add(lp.translate(s.text, eng, 0.3));
    write_mono(at("translations.hsb"), translations);

    // Held-out dev set for scoring: references and a noisy system output.
    const auto dev = lp.bilingual(200, 14);
    MonoCorpus hyp{"hsb", {}};
    for (std::size_t i = 0; i < dev.size(); ++i)
        hyp.add(lp.translate(dev[i].src.text, eng, 0.2));
    write_mono(at("dev.ref.hsb"), dev.target_side());
    write_mono(at("dev.hyp.hsb"), hyp);

    write_json(at("pipeline.json"),
               {{"langs", "de,hsb"},
                {"bilingual", {{"src", "bi.de"}, {"tgt", "bi.hsb"}, {"src_emb", "bi.de.aemb"}}},
                {"monolingual", {{"text", "mono.de"}, {"emb", "mono.de.aemb"}}},
                {"translations", "translations.hsb"},
                {"tm", {{"threshold", kDefaultTmThreshold}}},
                {"domain", {{"dedup", false}}},
                {"lm", {{"order", 3}, {"smoothing", "kn"}}},
                {"filter", {{"features", {"length", "perplexity"}}, {"unit", "chars"}, {"histogram_bins", 40}}},
                {"sample", {{"n", 100}, {"seed", 7}}},
                {"merge", {{"shuffle_seed", 2020}, {"generator", "toy-word-by-word"}}},
                {"score",
                 {{"hyp", "dev.hyp.hsb"},
                  {"ref", "dev.ref.hsb"},
                  {"metrics", {"bleu", "chrf2", "ter"}},
                  {"ci", {{"B", 1000}, {"level", 0.95}, {"seed", 1}}}}},
                {"output_dir", "out"}});
    std::cerr << "fixture written to " << dir.string() << '\n';
    return kExitOk;
}
