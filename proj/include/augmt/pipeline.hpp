#pragma once

#include <augmt/augment.hpp>
#include <augmt/corpus.hpp>
#include <augmt/digest.hpp>
#include <augmt/embedding.hpp>
#include <augmt/error.hpp>
#include <augmt/filter.hpp>
#include <augmt/io.hpp>
#include <augmt/metrics.hpp>
#include <augmt/ngram_lm.hpp>
#include <augmt/tm.hpp>

#include <nlohmann/json.hpp>

#include <deque>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace augmt {

/// Inputs and settings for the domain-select -> translate -> filter -> merge -> score chain.
/// Paths are relative to `base_dir` unless absolute.
struct PipelineConfig {
    std::filesystem::path base_dir;
    LanguagePair langs{"de", "hsb"};

    std::string bilingual_src, bilingual_tgt, bilingual_src_emb;
    std::string mono, mono_emb;
    std::string translations;

    double tm_threshold = kDefaultTmThreshold;
    bool dedup = false;
    LmOptions lm;
    bool use_length = true;
    bool use_perplexity = true;
    LengthUnit length_unit = LengthUnit::chars;
    std::size_t histogram_bins = 40;

    struct Sample {
        std::size_t n = 0;
        std::uint64_t seed = 0;
    };
    std::optional<Sample> sample;

    std::optional<std::uint64_t> shuffle_seed;
    std::string generator_id = "external";

    struct Score {
        std::string hyp, ref;
        std::vector<Metric> metrics{Metric::bleu, Metric::chrf2, Metric::ter};
        std::optional<BootstrapOptions> ci;
    };
    std::optional<Score> score;

    std::string output_dir = "pipeline_out";

    std::string resolve(const std::string &p) const {
        const std::filesystem::path path(p);
        return path.is_absolute() ? p : (base_dir / path).string();
    }

    static PipelineConfig from_json(const nlohmann::json &j, const std::filesystem::path &base_dir) {
        PipelineConfig c;
        c.base_dir = base_dir;
        try {
            if (j.contains("langs"))
                c.langs = parse_language_pair(j["langs"].get<std::string>());
            const auto &bi = j.at("bilingual");
            c.bilingual_src = bi.at("src").get<std::string>();
            c.bilingual_tgt = bi.at("tgt").get<std::string>();
            c.bilingual_src_emb = bi.at("src_emb").get<std::string>();
            const auto &mono = j.at("monolingual");
            c.mono = mono.at("text").get<std::string>();
            c.mono_emb = mono.at("emb").get<std::string>();
            c.translations = j.at("translations").get<std::string>();
            if (j.contains("tm"))
                c.tm_threshold = j["tm"].value("threshold", kDefaultTmThreshold);
            if (j.contains("domain"))
                c.dedup = j["domain"].value("dedup", false);
            if (j.contains("lm")) {
                const auto &lm = j["lm"];
                c.lm.order = lm.value("order", 3);
                const std::string sm = lm.value("smoothing", "kn");
                if (sm == "kn" || sm == "kneser_ney_interpolated")
                    c.lm.smoothing = Smoothing::kneser_ney_interpolated;
                else if (sm == "add_k" || sm == "add-k")
                    c.lm.smoothing = Smoothing::add_k;
                else
                    throw ValidationError("unknown smoothing '" + sm + "'");
                c.lm.add_k = lm.value("k", 0.01);
                c.lm.min_count = lm.value("min_count", std::size_t{1});
                if (lm.contains("discount"))
                    c.lm.discount = lm["discount"].get<double>();
            }
            if (j.contains("filter")) {
                const auto &f = j["filter"];
                if (f.contains("features")) {
                    c.use_length = c.use_perplexity = false;
                    for (const auto &name : f["features"]) {
                        const auto feat = parse_ratio_feature(name.get<std::string>());
                        (feat == RatioFeature::length ? c.use_length : c.use_perplexity) = true;
                    }
                }
                c.length_unit = parse_length_unit(f.value("unit", "chars"));
                c.histogram_bins = f.value("histogram_bins", std::size_t{40});
            }
            if (j.contains("sample"))
                c.sample = Sample{j["sample"].at("n").get<std::size_t>(), j["sample"].at("seed").get<std::uint64_t>()};
            if (j.contains("merge")) {
                const auto &m = j["merge"];
                if (m.contains("shuffle_seed"))
                    c.shuffle_seed = m["shuffle_seed"].get<std::uint64_t>();
                c.generator_id = m.value("generator", c.generator_id);
            }
            if (j.contains("score")) {
                const auto &s = j["score"];
                Score sc;
                sc.hyp = s.at("hyp").get<std::string>();
                sc.ref = s.at("ref").get<std::string>();
                if (s.contains("metrics")) {
                    sc.metrics.clear();
                    for (const auto &m : s["metrics"])
                        sc.metrics.push_back(parse_metric(m.get<std::string>()));
                }
                if (s.contains("ci")) {
                    BootstrapOptions b;
                    b.resamples = s["ci"].value("B", std::size_t{1000});
                    b.level = s["ci"].value("level", 0.95);
                    b.seed = s["ci"].at("seed").get<std::uint64_t>();
                    sc.ci = b;
                }
                c.score = sc;
            }
            c.output_dir = j.value("output_dir", c.output_dir);
        } catch (const nlohmann::json::exception &e) {
            throw ValidationError(std::string("pipeline config: ") + e.what());
        }
        if (!c.use_length && !c.use_perplexity)
            throw ValidationError("pipeline config: filter needs at least one feature");
        return c;
    }

    static PipelineConfig load(const std::string &path) {
        nlohmann::json j;
        try {
            j = read_json(path);
        } catch (const DataError &e) {
            throw ValidationError(std::string("pipeline config ") + e.what());
        }
        return from_json(j, std::filesystem::path(path).parent_path());
    }

    /// Canonical settings, independent of paths and thread count.
    nlohmann::json settings_json() const {
        nlohmann::json j{{"langs", langs.src + "," + langs.tgt},
                         {"tm_threshold", tm_threshold},
                         {"dedup", dedup},
                         {"lm",
                          {{"order", lm.order},
                           {"smoothing", to_string(lm.smoothing)},
                           {"k", lm.add_k},
                           {"min_count", lm.min_count},
                           {"discount", lm.discount ? nlohmann::json(*lm.discount) : nlohmann::json(nullptr)}}},
                         {"filter",
                          {{"length", use_length},
                           {"perplexity", use_perplexity},
                           {"unit", to_string(length_unit)},
                           {"histogram_bins", histogram_bins}}},
                         {"generator", generator_id}};
        j["shuffle_seed"] = shuffle_seed ? nlohmann::json(*shuffle_seed) : nlohmann::json(nullptr);
        j["sample"] = sample ? nlohmann::json{{"n", sample->n}, {"seed", sample->seed}} : nlohmann::json(nullptr);
        if (score) {
            std::vector<std::string> names;
            for (auto m : score->metrics)
                names.emplace_back(to_string(m));
            j["score"] = {{"metrics", names}};
            if (score->ci)
                j["score"]["ci"] = {{"B", score->ci->resamples}, {"level", score->ci->level}, {"seed", score->ci->seed}};
        }
        return j;
    }
};

namespace detail {

class StageRecorder {
  public:
    explicit StageRecorder(std::filesystem::path out_dir) : out_dir_(std::move(out_dir)) {}

    nlohmann::json &begin(const std::string &name, std::vector<std::string> command) {
        log_info("stage " + name);
        stages_.push_back({{"name", name}, {"command", std::move(command)}, {"inputs", nlohmann::json::object()},
                           {"outputs", nlohmann::json::object()}, {"counts", nlohmann::json::object()}});
        return stages_.back();
    }

    /// Records an input by its path as given in the config and the content digest.
    void input(nlohmann::json &stage, const std::string &label, const std::string &resolved) {
        if (!std::filesystem::exists(resolved))
            throw ValidationError("stage '" + stage["name"].get<std::string>() + "': missing input " + label + " ('" +
                                  resolved + "')");
        stage["inputs"][label] = file_digest(resolved);
    }

    std::string output(const std::string &name) const { return (out_dir_ / name).string(); }

    void seal(nlohmann::json &stage, const std::vector<std::string> &names) const {
        for (const auto &n : names)
            stage["outputs"][n] = file_digest((out_dir_ / n).string());
    }

    nlohmann::json stages() const {
        auto a = nlohmann::json::array();
        for (const auto &st : stages_)
            a.push_back(st);
        return a;
    }

  private:
    std::filesystem::path out_dir_;
    std::deque<nlohmann::json> stages_; // stable references across begin() calls
};

inline EmbeddingSet gather_rows(const EmbeddingSet &set, const std::vector<SelectedLine> &lines) {
    EmbeddingSet out;
    out.dim = set.dim;
    out.count = lines.size();
    out.normalized = set.normalized;
    out.model_name = set.model_name;
    out.values.reserve(lines.size() * set.dim);
    for (const auto &l : lines) {
        const auto row = set.row(l.mono_line);
        out.values.insert(out.values.end(), row.begin(), row.end());
    }
    return out;
}

} // namespace detail

// Stage writers shared by the CLI subcommands and the pipeline, so both produce the
// same bytes.

inline void write_selection(const DomainSelection &sel, const EmbeddingSet &rows, const std::string &text_path,
                            const std::string &emb_path, const std::string &jsonl_path) {
    write_mono(text_path, sel.corpus);
    write_embeddings(emb_path, rows);
    write_embedding_sidecar(emb_path, std::filesystem::path(text_path).filename().string(), rows.model_name, "");
    JsonlWriter w(jsonl_path);
    for (const auto &l : sel.selected_lines)
        w.write(to_json(l));
}

inline void write_annotation(const TmAnnotation &a, const std::string &jsonl_path, const std::string &summary_path) {
    {
        JsonlWriter w(jsonl_path);
        for (std::size_t i = 0; i < a.records.size(); ++i)
            w.write(to_json(a.records[i], i + 1));
    }
    if (!summary_path.empty())
        write_json(summary_path, to_json(a.summary));
}

/// Histogram file for one feature, next to the criterion file.
inline std::string histogram_path(const std::string &criterion_path, RatioFeature f) {
    std::filesystem::path p(criterion_path);
    return (p.parent_path() / (p.stem().string() + "." + to_string(f) + "_hist.csv")).string();
}

/// Writes the criterion and per-feature histograms; returns the file names written.
inline std::vector<std::string> write_fit(const FitResult &fit, const std::string &criterion_path, std::size_t bins) {
    std::vector<std::string> names{std::filesystem::path(criterion_path).filename().string()};
    write_json(criterion_path, to_json(fit.criterion));
    if (bins == 0)
        return names;
    for (auto f : {RatioFeature::length, RatioFeature::perplexity}) {
        const auto &values = f == RatioFeature::length ? fit.length_ratios : fit.perplexity_ratios;
        if (values.empty())
            continue;
        const auto path = histogram_path(criterion_path, f);
        write_histogram_csv(path, ratio_histogram(values, bins));
        names.push_back(std::filesystem::path(path).filename().string());
    }
    return names;
}

inline void write_filter(const FilterResult &r, const std::string &src_path, const std::string &tgt_path,
                         const std::string &decisions_path, const std::string &report_path) {
    write_corpus(r.passing, src_path, tgt_path);
    if (!decisions_path.empty()) {
        JsonlWriter w(decisions_path);
        for (const auto &d : r.decisions)
            w.write(to_json(d));
    }
    if (!report_path.empty())
        write_json(report_path, to_json(r.report));
}

inline void write_merged(const MergedCorpus &m, const std::string &src_path, const std::string &tgt_path,
                         const std::string &provenance_path) {
    write_corpus(m.corpus, src_path, tgt_path);
    JsonlWriter w(provenance_path);
    for (std::size_t i = 0; i < m.provenance.size(); ++i)
        w.write(to_json(m.provenance[i], i + 1));
}

/// Scores hypothesis and reference files with each metric. A single metric yields an
/// object, several yield an array. Also returns the segment count.
inline std::pair<nlohmann::json, std::size_t> score_files(const std::vector<Metric> &metrics, const std::string &hyp_path,
                                                          const std::string &ref_path,
                                                          const std::optional<BootstrapOptions> &ci, unsigned threads,
                                                          const MetricConfig &cfg = {}) {
    const LoadOptions allow_empty{true};
    const auto hyps = read_lines(hyp_path, allow_empty);
    const auto refs = read_lines(ref_path, allow_empty);
    nlohmann::json out = nlohmann::json::array();
    for (Metric m : metrics) {
        if (ci) {
            auto b = *ci;
            b.threads = threads;
            out.push_back(to_json(bootstrap_ci(m, hyps, refs, b, cfg)));
        } else {
            out.push_back(to_json(corpus_score(m, hyps, refs, cfg, threads)));
        }
    }
    if (out.size() == 1)
        return {out[0], hyps.size()};
    return {out, hyps.size()};
}

struct PipelineResult {
    nlohmann::json manifest;
    std::filesystem::path output_dir;
};

/// Runs every stage, writing outputs and manifest.json into the output directory. Output
/// bytes depend only on the config and input contents, never on `threads`.
///
/// Each stage's recorded command reproduces its outputs when run from the output
/// directory; input paths in commands are relative to that directory.
inline PipelineResult run_pipeline(const PipelineConfig &cfg, unsigned threads = 1,
                                   std::optional<std::filesystem::path> output_override = {}) {
    namespace fs = std::filesystem;
    const fs::path out_dir = output_override ? *output_override : fs::path(cfg.resolve(cfg.output_dir));
    fs::create_directories(out_dir);
    detail::StageRecorder rec(out_dir);
    const std::string langs = cfg.langs.src + "," + cfg.langs.tgt;
    const std::string s = cfg.langs.src, t = cfg.langs.tgt;
    const auto in = [&](const std::string &p) {
        const auto r = fs::relative(cfg.resolve(p), out_dir);
        return r.empty() ? fs::absolute(cfg.resolve(p)).generic_string() : r.generic_string();
    };
    // Shortest text that parses back to the same double.
    const auto num = [](double v) { return nlohmann::json(v).dump(); };

    // domain-select
    auto &ds = rec.begin("domain-select", {"domain-select", "--bi-emb", in(cfg.bilingual_src_emb), "--mono", in(cfg.mono),
                                           "--mono-emb", in(cfg.mono_emb), "--lang", s, cfg.dedup ? "--dedup" : "--no-dedup",
                                           "--out", "selected." + s, "--out-emb", "selected." + s + ".aemb", "--selection",
                                           "selection.jsonl"});
    rec.input(ds, "bilingual_src_emb", cfg.resolve(cfg.bilingual_src_emb));
    rec.input(ds, "mono", cfg.resolve(cfg.mono));
    rec.input(ds, "mono_emb", cfg.resolve(cfg.mono_emb));
    rec.input(ds, "bilingual_src", cfg.resolve(cfg.bilingual_src));
    rec.input(ds, "bilingual_tgt", cfg.resolve(cfg.bilingual_tgt));
    const auto bilingual = load_corpus(cfg.resolve(cfg.bilingual_src), cfg.resolve(cfg.bilingual_tgt), cfg.langs);
    const auto bi_emb = load_embeddings(cfg.resolve(cfg.bilingual_src_emb), bilingual.size());
    const auto mono = load_mono(cfg.resolve(cfg.mono), s);
    const VectorIndex mono_index(load_embeddings(cfg.resolve(cfg.mono_emb), mono.size()));
    const auto selection = domain_select(bi_emb, mono, mono_index, cfg.dedup, threads);
    const auto selected_emb = detail::gather_rows(mono_index.embeddings(), selection.selected_lines);
    write_selection(selection, selected_emb, rec.output("selected." + s), rec.output("selected." + s + ".aemb"),
                    rec.output("selection.jsonl"));
    ds["counts"] = {{"bilingual", bilingual.size()}, {"mono", mono.size()}, {"selected", selection.corpus.size()}};
    rec.seal(ds, {"selected." + s, "selected." + s + ".aemb", "selection.jsonl"});

    // tm-annotate: generator inputs for the selected sentences against the bilingual TM
    auto &tmst = rec.begin("tm-annotate", {"tm-annotate", "--input", "selected." + s, "--input-emb", "selected." + s + ".aemb",
                                           "--tm-src", in(cfg.bilingual_src), "--tm-tgt", in(cfg.bilingual_tgt), "--tm-emb",
                                           in(cfg.bilingual_src_emb), "--langs", langs, "--threshold", num(cfg.tm_threshold),
                                           "--exclude-self", "off",
                                           "--out", "generator_input.jsonl", "--summary", "tm_summary.json"});
    const VectorIndex tm_index(bi_emb);
    const auto annotation = annotate_corpus(selection.corpus, selected_emb, tm_index, bilingual,
                                            {cfg.tm_threshold, false, threads});
    write_annotation(annotation, rec.output("generator_input.jsonl"), rec.output("tm_summary.json"));
    tmst["counts"] = {{"inputs", annotation.records.size()}, {"matched", annotation.summary.matched},
                      {"unmatched", annotation.summary.unmatched}};
    rec.seal(tmst, {"generator_input.jsonl", "tm_summary.json"});

    // lm-train, one model per side
    const auto lm_stage = [&](const std::string &lang, const std::string &corpus_path, const MonoCorpus &side) {
        const std::string name = "lm." + lang + ".arpa";
        std::vector<std::string> cmd{"lm-train", "--corpus", in(corpus_path), "--lang", lang, "--order",
                                     std::to_string(cfg.lm.order), "--smoothing", to_string(cfg.lm.smoothing),
                                     "--min-count", std::to_string(cfg.lm.min_count), "--k", num(cfg.lm.add_k)};
        if (cfg.lm.discount) {
            cmd.emplace_back("--discount");
            cmd.push_back(num(*cfg.lm.discount));
        }
        cmd.emplace_back("--out");
        cmd.push_back(name);
        auto &st = rec.begin("lm-train:" + lang, cmd);
        const auto model = train_lm(side, cfg.lm);
        model.write_arpa(rec.output(name));
        st["counts"] = {{"sentences", side.size()}, {"vocab", model.vocab().size()}};
        st["smoothing"] = to_string(model.smoothing());
        if (!model.smoothing_note().empty())
            st["note"] = model.smoothing_note();
        rec.seal(st, {name});
        // Later stages score with the serialized model so each stage can be rerun from files.
        return NGramModel::read_arpa(rec.output(name));
    };
    const auto lm_src = lm_stage(s, cfg.bilingual_src, bilingual.source_side());
    const auto lm_tgt = lm_stage(t, cfg.bilingual_tgt, bilingual.target_side());
    const std::string lm_src_name = "lm." + s + ".arpa", lm_tgt_name = "lm." + t + ".arpa";
    const RatioScorer scorer{cfg.length_unit, &lm_src, &lm_tgt};

    // criterion-fit
    std::string feat_arg;
    if (cfg.use_length)
        feat_arg = "length";
    if (cfg.use_perplexity)
        feat_arg += feat_arg.empty() ? "perplexity" : ",perplexity";
    auto &cf = rec.begin("criterion-fit", {"criterion-fit", "--src", in(cfg.bilingual_src), "--tgt", in(cfg.bilingual_tgt),
                                           "--langs", langs, "--features", feat_arg, "--unit", to_string(cfg.length_unit),
                                           "--lm-src", lm_src_name, "--lm-tgt", lm_tgt_name, "--bins",
                                           std::to_string(cfg.histogram_bins), "--out", "criterion.json"});
    const auto fit = fit_criterion(bilingual, cfg.use_length, cfg.use_perplexity, scorer, lm_src_name, lm_tgt_name, threads);
    const auto cf_outputs = write_fit(fit, rec.output("criterion.json"), cfg.histogram_bins);
    cf["counts"] = {{"pairs", bilingual.size()}, {"skipped_length", fit.skipped_length},
                    {"skipped_perplexity", fit.skipped_perplexity}};
    rec.seal(cf, cf_outputs);

    // filter
    auto &fl = rec.begin("filter", {"filter", "--src", "selected." + s, "--tgt", in(cfg.translations), "--langs", langs,
                                    "--criterion", "criterion.json", "--lm-src", lm_src_name, "--lm-tgt", lm_tgt_name,
                                    "--out-src", "filtered." + s, "--out-tgt", "filtered." + t, "--decisions",
                                    "decisions.jsonl", "--report", "filter_report.json"});
    const std::string translations_path = cfg.resolve(cfg.translations);
    if (!fs::exists(translations_path))
        throw ValidationError("stage 'filter': missing translations '" + cfg.translations +
                              "'; they come from the external translation step fed by 'tm-annotate' (generator_input.jsonl)");
    rec.input(fl, "translations", translations_path);
    const auto translations = load_mono(translations_path, t);
    if (translations.size() != selection.corpus.size())
        throw DataError("stage 'filter': translations have " + std::to_string(translations.size()) +
                        " lines but 'domain-select' produced " + std::to_string(selection.corpus.size()));
    ParallelCorpus synthetic(cfg.langs);
    for (std::size_t i = 0; i < translations.size(); ++i)
        synthetic.add(selection.corpus[i].text, translations[i].text, Origin::synthetic);
    const auto filtered = apply_filter(synthetic, fit.criterion, scorer, threads);
    write_filter(filtered, rec.output("filtered." + s), rec.output("filtered." + t), rec.output("decisions.jsonl"),
                 rec.output("filter_report.json"));
    fl["counts"] = {{"total", filtered.report.total}, {"passed", filtered.report.passed}, {"failed", filtered.report.failed}};
    rec.seal(fl, {"filtered." + s, "filtered." + t, "decisions.jsonl", "filter_report.json"});

    // sample: random baseline drawn from the same synthetic corpus
    if (cfg.sample) {
        auto &sm = rec.begin("sample", {"sample", "--src", "selected." + s, "--tgt", in(cfg.translations), "--langs", langs,
                                        "--n", std::to_string(cfg.sample->n), "--seed", std::to_string(cfg.sample->seed),
                                        "--out-src", "sample." + s, "--out-tgt", "sample." + t});
        const auto sampled = random_sample(synthetic, cfg.sample->n, cfg.sample->seed);
        write_corpus(sampled, rec.output("sample." + s), rec.output("sample." + t));
        sm["counts"] = {{"population", synthetic.size()}, {"sampled", sampled.size()}};
        sm["seed"] = cfg.sample->seed;
        rec.seal(sm, {"sample." + s, "sample." + t});
    }

    // merge
    const std::string criterion_id = file_digest(rec.output("criterion.json"));
    std::vector<std::string> merge_cmd{"merge", "--orig-src", in(cfg.bilingual_src), "--orig-tgt", in(cfg.bilingual_tgt),
                                       "--syn-src", "filtered." + s, "--syn-tgt", "filtered." + t, "--langs", langs,
                                       "--generator", cfg.generator_id, "--criterion-id", criterion_id};
    if (cfg.shuffle_seed) {
        merge_cmd.emplace_back("--shuffle-seed");
        merge_cmd.push_back(std::to_string(*cfg.shuffle_seed));
    }
    for (const char *a : {"--out-src", "merged.", "--out-tgt", "merged.", "--provenance", "provenance.jsonl"})
        merge_cmd.emplace_back(a);
    merge_cmd[merge_cmd.size() - 5] += s;
    merge_cmd[merge_cmd.size() - 3] += t;
    auto &mg = rec.begin("merge", merge_cmd);
    const auto merged = merge(bilingual, filtered.passing, cfg.shuffle_seed, cfg.generator_id, criterion_id);
    write_merged(merged, rec.output("merged." + s), rec.output("merged." + t), rec.output("provenance.jsonl"));
    mg["counts"] = {{"original", bilingual.size()}, {"synthetic", filtered.passing.size()}, {"merged", merged.corpus.size()}};
    if (cfg.shuffle_seed)
        mg["seed"] = *cfg.shuffle_seed;
    rec.seal(mg, {"merged." + s, "merged." + t, "provenance.jsonl"});

    // score
    if (cfg.score) {
        std::string metric_arg;
        for (Metric m : cfg.score->metrics)
            metric_arg += (metric_arg.empty() ? "" : ",") + std::string(to_string(m));
        std::vector<std::string> cmd{"score", "--metric", metric_arg, "--hyp", in(cfg.score->hyp), "--ref",
                                     in(cfg.score->ref)};
        if (cfg.score->ci) {
            for (const auto &a : {std::string("--ci"), std::to_string(cfg.score->ci->resamples), num(cfg.score->ci->level),
                                  std::to_string(cfg.score->ci->seed)})
                cmd.push_back(a);
        }
        cmd.emplace_back("--out");
        cmd.emplace_back("scores.json");
        auto &sc = rec.begin("score", cmd);
        rec.input(sc, "hyp", cfg.resolve(cfg.score->hyp));
        rec.input(sc, "ref", cfg.resolve(cfg.score->ref));
        const auto result = score_files(cfg.score->metrics, cfg.resolve(cfg.score->hyp), cfg.resolve(cfg.score->ref),
                                        cfg.score->ci, threads);
        write_json(rec.output("scores.json"), result.first);
        sc["counts"] = {{"segments", result.second}};
        if (cfg.score->ci)
            sc["seed"] = cfg.score->ci->seed;
        rec.seal(sc, {"scores.json"});
    }

    PipelineResult result;
    result.output_dir = out_dir;
    const auto settings = cfg.settings_json();
    result.manifest = {{"settings", settings},
                       {"settings_digest", digest(settings.dump())},
                       {"working_directory", "output directory"},
                       {"stages", rec.stages()}};
    write_json((out_dir / "manifest.json").string(), result.manifest);
    return result;
}

} // namespace augmt
