#include <augmt/augment.hpp>
#include <augmt/corpus.hpp>
#include <augmt/embedding.hpp>
#include <augmt/error.hpp>
#include <augmt/filter.hpp>
#include <augmt/gan_objective.hpp>
#include <augmt/io.hpp>
#include <augmt/metrics.hpp>
#include <augmt/ngram_lm.hpp>
#include <augmt/pipeline.hpp>
#include <augmt/tm.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace augmt;
namespace fs = std::filesystem;

namespace {

// Writes to the file, or to stdout when no path is given.
void emit_json(const std::string &path, const nlohmann::json &j) {
    if (path.empty())
        std::cout << j.dump(2) << '\n';
    else
        write_json(path, j);
}

std::vector<std::string> split_commas(const std::string &s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto end = s.find(',', start);
        out.push_back(s.substr(start, end == std::string::npos ? std::string::npos : end - start));
        if (end == std::string::npos)
            break;
        start = end + 1;
    }
    return out;
}

Smoothing parse_smoothing(const std::string &s) {
    if (s == "kn" || s == "kneser_ney_interpolated" || s == "kneser-ney")
        return Smoothing::kneser_ney_interpolated;
    if (s == "add-k" || s == "add_k")
        return Smoothing::add_k;
    throw ValidationError("unknown smoothing '" + s + "' (kn or add-k)");
}

// Relative model paths in a criterion file are resolved against the criterion's directory.
std::string beside(const std::string &anchor, const std::string &path) {
    if (path.empty() || fs::path(path).is_absolute())
        return path;
    return (fs::path(anchor).parent_path() / path).string();
}

struct Args {
    unsigned threads = 1;

    // shared corpus options
    std::string src, tgt, langs = "de,hsb", lang = "de", out, out_src, out_tgt;

    // stats
    std::string corpus_name = "corpus";
    bool sample_sd = false, table = false;

    // embeddings / retrieval
    std::string emb, queries, corpus;
    std::size_t count = 0, k = 10;
    bool exclude_self = false;

    // tm-annotate
    std::string input, input_emb, tm_src, tm_tgt, tm_emb, summary, exclude_mode = "auto";
    double threshold = kDefaultTmThreshold;

    // domain-select
    std::string bi_emb, mono, mono_emb, out_emb, selection;
    bool dedup = false;

    // lm
    std::string smoothing = "kn", lm;
    int order = 3;
    std::size_t min_count = 1;
    double add_k = 0.01;
    std::optional<double> discount;

    // criterion-fit / filter
    std::string features = "length,perplexity", unit = "chars", lm_src, lm_tgt, criterion, decisions, report;
    std::size_t bins = 40;

    // sample
    std::size_t n = 0;
    std::uint64_t seed = 0;

    // merge
    std::string orig_src, orig_tgt, syn_src, syn_tgt, generator = "external", criterion_id, provenance;
    std::optional<std::uint64_t> shuffle_seed;

    // score
    std::string metric = "bleu", hyp, ref;
    std::vector<std::string> ci;
    bool lowercase = false;

    // gan-oracle
    std::string pdata, pg, d;

    // pipeline
    std::string config, out_dir, translations;
    std::optional<double> tm_threshold_override;
};

int run_stats(const Args &a) {
    const StatsOptions opts{a.sample_sd};
    nlohmann::json out;
    std::vector<std::pair<std::string, LengthStats>> rows;
    if (!a.tgt.empty()) {
        const auto c = load_corpus(a.src, a.tgt, parse_language_pair(a.langs));
        const auto [s, t] = corpus_stats(c, opts);
        out = {{"corpus", a.corpus_name}, {c.langs().src, to_json(s)}, {c.langs().tgt, to_json(t)}};
        rows = {{c.langs().src, s}, {c.langs().tgt, t}};
    } else {
        const auto c = load_mono(a.src, a.lang);
        const auto s = corpus_stats(c, opts);
        out = {{"corpus", a.corpus_name}, {a.lang, to_json(s)}};
        rows = {{a.lang, s}};
    }
    if (a.table) {
        std::cout << stats_table_header() << '\n';
        for (const auto &[lang, s] : rows)
            std::cout << format_stats_row(a.corpus_name, lang, s) << '\n';
        if (!a.out.empty())
            write_json(a.out, out);
    } else {
        emit_json(a.out, out);
    }
    return kExitOk;
}

int run_embed_check(const Args &a) {
    std::optional<std::size_t> expected;
    if (a.count)
        expected = a.count;
    if (!a.corpus.empty())
        expected = read_lines(a.corpus, LoadOptions{true}).size();
    const auto set = load_embeddings(a.emb, expected);
    double min_norm = set.count ? INFINITY : 0.0, max_norm = 0.0;
    for (std::size_t i = 0; i < set.count; ++i) {
        double sq = 0;
        for (float v : set.row(i))
            sq += double(v) * v;
        min_norm = std::min(min_norm, std::sqrt(sq));
        max_norm = std::max(max_norm, std::sqrt(sq));
    }
    emit_json(a.out, {{"file", fs::path(a.emb).filename().string()},
                      {"count", set.count},
                      {"dim", set.dim},
                      {"normalized", set.normalized},
                      {"model_name", set.model_name},
                      {"min_norm", min_norm},
                      {"max_norm", max_norm},
                      {"digest", file_digest(a.emb)}});
    return kExitOk;
}

int run_index_query(const Args &a) {
    if (a.k == 0)
        throw ValidationError("--k must be positive");
    const VectorIndex index(load_embeddings(a.emb));
    const auto queries = load_embeddings(a.queries.empty() ? a.emb : a.queries);
    const auto results = index.nearest_batch(queries, a.k, a.threads, a.exclude_self);
    std::optional<JsonlWriter> file;
    if (!a.out.empty())
        file.emplace(a.out);
    for (std::size_t q = 0; q < results.size(); ++q) {
        nlohmann::json nb = nlohmann::json::array();
        for (const auto &r : results[q])
            nb.push_back({{"line", r.line_id + 1}, {"distance", r.distance}});
        const nlohmann::json j{{"query", q + 1}, {"neighbors", nb}};
        if (file)
            file->write(j);
        else
            std::cout << j.dump() << '\n';
    }
    return kExitOk;
}

int run_tm_annotate(const Args &a) {
    const auto langs = parse_language_pair(a.langs);
    const auto inputs = load_mono(a.input, langs.src);
    const auto input_emb = load_embeddings(a.input_emb, inputs.size());
    const auto tm = load_corpus(a.tm_src, a.tm_tgt, langs);
    const VectorIndex index(load_embeddings(a.tm_emb, tm.size()));
    // Self-retrieval on the TM's own source side would always match at distance 0.
    bool exclude = a.exclude_mode == "on";
    if (a.exclude_mode == "auto")
        exclude = fs::equivalent(a.input, a.tm_src);
    const auto ann = annotate_corpus(inputs, input_emb, index, tm, {a.threshold, exclude, a.threads});
    write_annotation(ann, a.out, a.summary);
    if (a.summary.empty())
        std::cout << to_json(ann.summary).dump(2) << '\n';
    return kExitOk;
}

int run_domain_select(const Args &a) {
    const auto mono = load_mono(a.mono, a.lang);
    const VectorIndex index(load_embeddings(a.mono_emb, mono.size()));
    const auto bi = load_embeddings(a.bi_emb);
    const auto sel = domain_select(bi, mono, index, a.dedup, a.threads);
    const auto rows = detail::gather_rows(index.embeddings(), sel.selected_lines);
    if (a.out_emb.empty() || a.selection.empty())
        throw ValidationError("domain-select needs --out-emb and --selection");
    write_selection(sel, rows, a.out, a.out_emb, a.selection);
    log_info("selected " + std::to_string(sel.corpus.size()) + " of " + std::to_string(bi.count) + " queries");
    return kExitOk;
}

LmOptions lm_options(const Args &a) {
    LmOptions o;
    o.order = a.order;
    o.smoothing = parse_smoothing(a.smoothing);
    o.add_k = a.add_k;
    o.min_count = a.min_count;
    o.discount = a.discount;
    return o;
}

int run_lm_train(const Args &a) {
    const auto corpus = load_mono(a.corpus, a.lang);
    const auto model = train_lm(corpus, lm_options(a));
    model.write_arpa(a.out);
    if (!model.smoothing_note().empty())
        log_info(model.smoothing_note());
    return kExitOk;
}

int run_lm_score(const Args &a) {
    const auto model = NGramModel::read_arpa(a.lm);
    const auto corpus = load_mono(a.input, a.lang, LoadOptions{true});
    const auto scores = model.perplexity_batch(corpus.sentences, a.threads);
    std::optional<JsonlWriter> file;
    if (!a.out.empty())
        file.emplace(a.out);
    double log_sum = 0;
    std::size_t tokens = 0, oov = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto j = to_json(scores[i], i + 1);
        if (file)
            file->write(j);
        else
            std::cout << j.dump() << '\n';
        log_sum += scores[i].log_prob_sum;
        tokens += scores[i].token_count;
        oov += scores[i].oov_count;
    }
    const double ppl = tokens ? std::exp(-log_sum / static_cast<double>(tokens)) : 0.0;
    log_info("corpus ppl " + std::to_string(ppl) + " over " + std::to_string(tokens) + " tokens, " +
             std::to_string(oov) + " oov");
    return kExitOk;
}

int run_criterion_fit(const Args &a) {
    bool use_len = false, use_ppl = false;
    for (const auto &f : split_commas(a.features))
        (parse_ratio_feature(f) == RatioFeature::length ? use_len : use_ppl) = true;
    const auto corpus = load_corpus(a.src, a.tgt, parse_language_pair(a.langs));
    std::optional<NGramModel> ms, mt;
    if (use_ppl) {
        if (a.lm_src.empty() || a.lm_tgt.empty())
            throw ValidationError("the perplexity feature needs --lm-src and --lm-tgt");
        ms = NGramModel::read_arpa(a.lm_src);
        mt = NGramModel::read_arpa(a.lm_tgt);
    }
    const RatioScorer scorer{parse_length_unit(a.unit), ms ? &*ms : nullptr, mt ? &*mt : nullptr};
    // Model ids are stored relative to the criterion file so the filter can find them.
    const auto rel = [&](const std::string &p) {
        return p.empty() ? p : fs::relative(p, fs::absolute(a.out).parent_path()).generic_string();
    };
    const auto fit = fit_criterion(corpus, use_len, use_ppl, scorer, rel(a.lm_src), rel(a.lm_tgt), a.threads);
    write_fit(fit, a.out, a.bins);
    if (fit.skipped_length || fit.skipped_perplexity)
        log_info("skipped " + std::to_string(fit.skipped_length) + " length and " +
                 std::to_string(fit.skipped_perplexity) + " perplexity ratios");
    return kExitOk;
}

int run_filter(const Args &a) {
    const auto criterion = load_criterion(a.criterion);
    const auto corpus = load_corpus(a.src, a.tgt, parse_language_pair(a.langs));
    std::optional<NGramModel> ms, mt;
    if (criterion.perplexity) {
        const auto src = a.lm_src.empty() ? beside(a.criterion, criterion.lm_src) : a.lm_src;
        const auto tgt = a.lm_tgt.empty() ? beside(a.criterion, criterion.lm_tgt) : a.lm_tgt;
        if (src.empty() || tgt.empty())
            throw ValidationError("the perplexity feature needs --lm-src and --lm-tgt");
        ms = NGramModel::read_arpa(src);
        mt = NGramModel::read_arpa(tgt);
    }
    const RatioScorer scorer{criterion.length_unit, ms ? &*ms : nullptr, mt ? &*mt : nullptr};
    const auto result = apply_filter(corpus, criterion, scorer, a.threads);
    write_filter(result, a.out_src, a.out_tgt, a.decisions, a.report);
    if (a.report.empty())
        std::cout << to_json(result.report).dump(2) << '\n';
    return kExitOk;
}

int run_sample(const Args &a) {
    const auto corpus = load_corpus(a.src, a.tgt, parse_language_pair(a.langs));
    write_corpus(random_sample(corpus, a.n, a.seed), a.out_src, a.out_tgt);
    return kExitOk;
}

int run_merge(const Args &a) {
    const auto langs = parse_language_pair(a.langs);
    const auto orig = load_corpus(a.orig_src, a.orig_tgt, langs);
    const auto syn = load_corpus(a.syn_src, a.syn_tgt, langs, LoadOptions{true});
    const auto merged = merge(orig, syn, a.shuffle_seed, a.generator, a.criterion_id);
    write_merged(merged, a.out_src, a.out_tgt, a.provenance);
    return kExitOk;
}

int run_score(const Args &a) {
    std::vector<Metric> metrics;
    for (const auto &m : split_commas(a.metric))
        metrics.push_back(parse_metric(m));
    std::optional<BootstrapOptions> ci;
    if (!a.ci.empty()) {
        if (a.ci.size() != 3)
            throw ValidationError("--ci takes B level seed");
        try {
            ci = BootstrapOptions{std::stoul(a.ci[0]), std::stod(a.ci[1]), std::stoull(a.ci[2]), a.threads};
        } catch (const std::logic_error &) {
            throw ValidationError("--ci values must be numbers");
        }
    }
    MetricConfig cfg;
    cfg.lowercase = a.lowercase;
    emit_json(a.out, score_files(metrics, a.hyp, a.ref, ci, a.threads, cfg).first);
    return kExitOk;
}

int run_gan_oracle(const Args &a) {
    const auto p = gan::distribution_from_json(read_json(a.pdata));
    const auto q = gan::distribution_from_json(read_json(a.pg));
    const auto d_star = gan::optimal_discriminator(p, q);
    gan::DiscriminatorTable d = d_star;
    if (!a.d.empty()) {
        try {
            d.values = read_json(a.d).get<std::vector<double>>();
        } catch (const nlohmann::json::exception &e) {
            throw DataError(a.d + ": " + e.what());
        }
    }
    const double value = gan::gan_value(p, q, d);
    const double value_star = gan::gan_value(p, q, d_star);
    const double j = gan::jsd(p, q);
    emit_json(a.out, {{"value", value},
                      {"jsd", j},
                      {"equilibrium_gap", value_star + gan::kLn4},
                      {"identity_residual", value_star + gan::kLn4 - 2.0 * j},
                      {"d_star", d_star.values}});
    return kExitOk;
}

int run_pipeline_cmd(const Args &a) {
    auto cfg = PipelineConfig::load(a.config);
    if (!a.translations.empty())
        cfg.translations = fs::absolute(a.translations).string();
    if (a.tm_threshold_override)
        cfg.tm_threshold = *a.tm_threshold_override;
    if (a.shuffle_seed)
        cfg.shuffle_seed = a.shuffle_seed;
    std::optional<fs::path> out;
    if (!a.out_dir.empty())
        out = fs::path(a.out_dir);
    const auto result = run_pipeline(cfg, a.threads, out);
    log_info("manifest written to " + (result.output_dir / "manifest.json").string());
    return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Monolingual data augmentation toolkit: retrieval, TM inputs, LM ratio filtering, metrics"};
    app.require_subcommand(1);
    app.fallthrough();
    Args a;
    app.add_option("--threads", a.threads, "worker threads (results do not depend on it)")
        ->check(CLI::Range(1u, 1024u));

    auto *stats = app.add_subcommand("stats", "sentence length statistics (words and characters)");
    stats->add_option("--src", a.src, "corpus file (source side)")->required();
    stats->add_option("--tgt", a.tgt, "target side for a parallel corpus");
    stats->add_option("--langs", a.langs, "language pair, e.g. de,hsb");
    stats->add_option("--lang", a.lang, "language of a monolingual corpus");
    stats->add_option("--name", a.corpus_name, "corpus label for the table");
    stats->add_flag("--sample-sd", a.sample_sd, "n-1 denominator instead of n");
    stats->add_flag("--table", a.table, "print table rows instead of JSON");
    stats->add_option("--out", a.out, "write JSON here");

    auto *echeck = app.add_subcommand("embed-check", "validate an AEMB1 embedding file");
    echeck->add_option("--emb", a.emb)->required();
    echeck->add_option("--count", a.count, "expected row count");
    echeck->add_option("--corpus", a.corpus, "corpus whose line count the file must match");
    echeck->add_option("--out", a.out);

    auto *iq = app.add_subcommand("index-query", "exact k nearest neighbors by Euclidean distance");
    iq->add_option("--emb", a.emb, "indexed vectors")->required();
    iq->add_option("--queries", a.queries, "query vectors (default: the indexed vectors)");
    iq->add_option("--k", a.k);
    iq->add_flag("--exclude-self", a.exclude_self, "skip the query's own row");
    iq->add_option("--out", a.out, "JSONL output");

    auto *tma = app.add_subcommand("tm-annotate", "attach the nearest TM pair to each input sentence");
    tma->add_option("--input", a.input)->required();
    tma->add_option("--input-emb", a.input_emb)->required();
    tma->add_option("--tm-src", a.tm_src)->required();
    tma->add_option("--tm-tgt", a.tm_tgt)->required();
    tma->add_option("--tm-emb", a.tm_emb)->required();
    tma->add_option("--langs", a.langs);
    tma->add_option("--threshold", a.threshold, "maximum distance for a match");
    tma->add_option("--exclude-self", a.exclude_mode, "skip the same TM line: auto (when the input is the TM source), on, off")
        ->check(CLI::IsMember({"auto", "on", "off"}));
    tma->add_option("--out", a.out, "JSONL records")->required();
    tma->add_option("--summary", a.summary, "summary JSON");

    auto *ds = app.add_subcommand("domain-select", "nearest monolingual sentence for every bilingual source");
    ds->add_option("--bi-emb", a.bi_emb)->required();
    ds->add_option("--mono", a.mono)->required();
    ds->add_option("--mono-emb", a.mono_emb)->required();
    ds->add_option("--lang", a.lang);
    ds->add_flag("--dedup,!--no-dedup", a.dedup, "drop repeated selections");
    ds->add_option("--out", a.out, "selected sentences")->required();
    ds->add_option("--out-emb", a.out_emb, "their embedding rows")->required();
    ds->add_option("--selection", a.selection, "JSONL provenance of each selection")->required();

    auto *lmt = app.add_subcommand("lm-train", "train an n-gram LM and write ARPA");
    lmt->add_option("--corpus", a.corpus)->required();
    lmt->add_option("--lang", a.lang);
    lmt->add_option("--order", a.order)->check(CLI::Range(1, kMaxOrder));
    lmt->add_option("--smoothing", a.smoothing, "kn or add-k");
    lmt->add_option("--k", a.add_k, "add-k constant");
    lmt->add_option("--min-count", a.min_count, "words rarer than this map to <unk>");
    lmt->add_option("--discount", a.discount, "fixed Kneser-Ney discount");
    lmt->add_option("--out", a.out)->required();

    auto *lms = app.add_subcommand("lm-score", "per-sentence perplexity");
    lms->add_option("--lm", a.lm)->required();
    lms->add_option("--input", a.input)->required();
    lms->add_option("--lang", a.lang);
    lms->add_option("--out", a.out, "JSONL output");

    auto *cf = app.add_subcommand("criterion-fit", "mean and sd of length / perplexity ratios on natural data");
    cf->add_option("--src", a.src)->required();
    cf->add_option("--tgt", a.tgt)->required();
    cf->add_option("--langs", a.langs);
    cf->add_option("--features", a.features, "length,perplexity");
    cf->add_option("--unit", a.unit, "chars or words");
    cf->add_option("--lm-src", a.lm_src);
    cf->add_option("--lm-tgt", a.lm_tgt);
    cf->add_option("--bins", a.bins, "histogram bins (0: none)");
    cf->add_option("--out", a.out)->required();

    auto *fl = app.add_subcommand("filter", "keep synthetic pairs inside every criterion interval");
    fl->add_option("--src", a.src)->required();
    fl->add_option("--tgt", a.tgt)->required();
    fl->add_option("--langs", a.langs);
    fl->add_option("--criterion", a.criterion)->required();
    fl->add_option("--lm-src", a.lm_src, "default: the criterion's model");
    fl->add_option("--lm-tgt", a.lm_tgt, "default: the criterion's model");
    fl->add_option("--out-src", a.out_src)->required();
    fl->add_option("--out-tgt", a.out_tgt)->required();
    fl->add_option("--decisions", a.decisions, "JSONL per-pair decisions");
    fl->add_option("--report", a.report, "report JSON");

    auto *sm = app.add_subcommand("sample", "seeded random subset, original order kept");
    sm->add_option("--src", a.src)->required();
    sm->add_option("--tgt", a.tgt)->required();
    sm->add_option("--langs", a.langs);
    sm->add_option("--n", a.n)->required();
    sm->add_option("--seed", a.seed)->required();
    sm->add_option("--out-src", a.out_src)->required();
    sm->add_option("--out-tgt", a.out_tgt)->required();

    auto *mg = app.add_subcommand("merge", "original plus synthetic pairs with provenance");
    mg->add_option("--orig-src", a.orig_src)->required();
    mg->add_option("--orig-tgt", a.orig_tgt)->required();
    mg->add_option("--syn-src", a.syn_src)->required();
    mg->add_option("--syn-tgt", a.syn_tgt)->required();
    mg->add_option("--langs", a.langs);
    mg->add_option("--shuffle-seed", a.shuffle_seed);
    mg->add_option("--generator", a.generator);
    mg->add_option("--criterion-id", a.criterion_id);
    mg->add_option("--out-src", a.out_src)->required();
    mg->add_option("--out-tgt", a.out_tgt)->required();
    mg->add_option("--provenance", a.provenance)->required();

    auto *sc = app.add_subcommand("score", "corpus BLEU, chrF2, TER with optional bootstrap CI");
    sc->add_option("--metric", a.metric, "bleu, chrf2, ter or a comma list");
    sc->add_option("--hyp", a.hyp)->required();
    sc->add_option("--ref", a.ref)->required();
    sc->add_option("--ci", a.ci, "B level seed")->expected(3);
    sc->add_flag("--lowercase", a.lowercase);
    sc->add_option("--out", a.out);

    auto *go = app.add_subcommand("gan-oracle", "value function, JSD and equilibrium gap for discrete distributions");
    go->add_option("--pdata", a.pdata)->required();
    go->add_option("--pg", a.pg)->required();
    go->add_option("--d", a.d, "discriminator outputs; default the optimal one");
    go->add_option("--out", a.out);

    auto *pl = app.add_subcommand("pipeline", "domain-select, TM inputs, LMs, criterion, filter, merge, score");
    pl->add_option("--config", a.config)->required();
    pl->add_option("--out-dir", a.out_dir, "overrides output_dir");
    pl->add_option("--translations", a.translations, "overrides translations");
    pl->add_option("--tm-threshold", a.tm_threshold_override);
    pl->add_option("--shuffle-seed", a.shuffle_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*stats) return run_stats(a);
        if (*echeck) return run_embed_check(a);
        if (*iq) return run_index_query(a);
        if (*tma) return run_tm_annotate(a);
        if (*ds) return run_domain_select(a);
        if (*lmt) return run_lm_train(a);
        if (*lms) return run_lm_score(a);
        if (*cf) return run_criterion_fit(a);
        if (*fl) return run_filter(a);
        if (*sm) return run_sample(a);
        if (*mg) return run_merge(a);
        if (*sc) return run_score(a);
        if (*go) return run_gan_oracle(a);
        if (*pl) return run_pipeline_cmd(a);
    } catch (const ValidationError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const DataError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const fs::filesystem_error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitValidation;
}
