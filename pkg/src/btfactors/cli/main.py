"""Command-line entry point.

Commands mirror the library surface: ``toygen`` emits a seeded toy task,
``train`` fits channel/LM models, ``backtranslate``/``manipulate``/
``select``/``score`` generate and score synthetic corpora, ``bt-experiment``
sweeps strategies over seeds, ``analyze`` reports corpus diagnostics, and
``oracle`` tabulates the exact marginal-likelihood bounds.  Every command
writes a run manifest beside its outputs; stochastic commands require an
explicit ``--seed`` (there is no wall-clock fallback).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .. import __version__
from ..btloop import (
    BTStrategy,
    DEFAULT_BEAM_SIZE,
    DEFAULT_GAMMA_SCORE,
    DEFAULT_GAMMA_SPLIT,
    DEFAULT_NUM_CANDIDATES,
    ExperimentConfig,
    evaluate_marginal_oracles,
    run_bt_experiment,
    synthesize_corpus,
    train_forward,
)
from ..analysis import (
    corpus_importance_report,
    corpus_profile,
    corpus_quality_report,
    sentence_representation_matrix,
    singular_spectrum,
)
from ..errors import BtfactorsError, ConfigError
from ..manipulate import SyntheticPair, split_monolingual
from ..scoring import GammaParams, gamma_distribution, gamma_sample, gamma_select
from ..streams import sentence_stream
from ..toyseq.decode import sample_candidate_set
from ..toyseq.models import ChannelModel, NGramLM, train_channel, train_ngram_lm
from ..toyseq.taskgen import ToyTaskSpec, generate_toy_task
from .manifest import build_manifest, read_manifest, write_manifest
from .records import (
    read_candidate_records,
    read_mono,
    read_parallel,
    read_synthetic,
    write_candidate_records,
    write_mono,
    write_parallel,
    write_synthetic,
)

TINY_TASK = ToyTaskSpec(
    source_vocab_size=4,
    target_vocab_size=4,
    length_range=(2, 4),
    channel_noise=0.2,
    bitext_size=400,
    mono_size=120,
    test_size=60,
    seed=0,
)


def _write_text(path, text: str) -> None:
    Path(path).write_text(text)


def _load_channel(path) -> ChannelModel:
    return ChannelModel.from_text(Path(path).read_text())


def _load_lm(path) -> NGramLM:
    return NGramLM.from_text(Path(path).read_text())


def _emit_manifest(out_dir_or_file, command, params, seed, inputs, outputs, argv):
    target = Path(out_dir_or_file)
    manifest_path = target / "manifest.json" if target.is_dir() else Path(str(target) + ".manifest.json")
    manifest = build_manifest(command, params, seed, inputs, outputs, argv)
    write_manifest(manifest_path, manifest)


# -- command implementations ----------------------------------------------------

def _cmd_toygen(args, argv) -> int:
    spec = ToyTaskSpec(
        source_vocab_size=args.source_vocab,
        target_vocab_size=args.target_vocab,
        length_range=(args.min_len, args.max_len),
        channel_noise=args.noise,
        bitext_size=args.bitext,
        mono_size=args.mono,
        test_size=args.test,
        seed=args.seed,
    )
    task = generate_toy_task(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_parallel(out / "bitext.tsv", task.bitext)
    write_mono(out / "mono.txt", task.mono)
    write_parallel(out / "mono_refs.tsv", task.mono_refs)
    write_parallel(out / "test.tsv", task.test)
    _write_text(out / "truth_lm.txt", task.truth_lm.to_text())
    _write_text(out / "truth_channel.txt", task.truth_channel.to_text())
    outputs = ["bitext.tsv", "mono.txt", "mono_refs.tsv", "test.tsv",
               "truth_lm.txt", "truth_channel.txt"]
    params = {
        "source_vocab": args.source_vocab, "target_vocab": args.target_vocab,
        "min_len": args.min_len, "max_len": args.max_len, "noise": args.noise,
        "bitext": args.bitext, "mono": args.mono, "test": args.test,
    }
    _emit_manifest(out, "toygen", params, args.seed, {}, outputs, argv)
    return 0


def _cmd_train(args, argv) -> int:
    bitext = read_parallel(args.bitext)
    inputs = {"bitext": args.bitext}
    if args.kind == "lm":
        model_text = train_ngram_lm(bitext.sources(), args.order, args.alpha).to_text()
    elif args.kind == "backward":
        model_text = train_channel(bitext, "target_to_source", args.alpha).to_text()
    else:
        synthetic = []
        if args.synthetic:
            synthetic = read_synthetic(args.synthetic)
            inputs["synthetic"] = args.synthetic
        model_text = train_forward(bitext, synthetic, args.alpha).to_text()
    _write_text(args.out, model_text)
    params = {"kind": args.kind, "order": args.order, "alpha": args.alpha}
    _emit_manifest(args.out, "train", params, None, inputs, [str(args.out)], argv)
    return 0


def _require_seed(args) -> None:
    if args.seed is None:
        raise ConfigError("--seed is required for stochastic commands")


def _cmd_backtranslate(args, argv) -> int:
    mono = read_mono(args.mono)
    backward = _load_channel(args.backward)
    inputs = {"mono": args.mono, "backward": args.backward}
    lm = None
    if args.strategy in ("sampling", "gamma-select", "gamma-sample"):
        _require_seed(args)
    seed = args.seed if args.seed is not None else 0
    if args.strategy == "beam":
        strategy = BTStrategy.beam()
    elif args.strategy == "sampling":
        strategy = BTStrategy.sampling()
    else:
        if not args.lm:
            raise ConfigError(f"--lm is required for strategy {args.strategy!r}")
        lm = _load_lm(args.lm)
        inputs["lm"] = args.lm
        maker = BTStrategy.gamma_select if args.strategy == "gamma-select" else BTStrategy.gamma_sample
        strategy = maker(gamma=args.gamma, num_candidates=args.num_candidates)
    pairs = synthesize_corpus(mono, backward, lm, strategy, seed, args.beam_size)
    write_synthetic(args.out, pairs)
    params = {
        "strategy": args.strategy, "gamma": args.gamma,
        "num_candidates": args.num_candidates, "beam_size": args.beam_size,
    }
    _emit_manifest(args.out, "backtranslate", params, args.seed, inputs, [str(args.out)], argv)
    return 0


def _cmd_manipulate(args, argv) -> int:
    mono = read_mono(args.mono)
    backward = _load_channel(args.backward)
    strategy = BTStrategy.data_manipulation(gamma=args.gamma, split_seed=args.seed)
    pairs = synthesize_corpus(mono, backward, None, strategy, args.seed, args.beam_size)
    plan = split_monolingual(mono, args.gamma, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_synthetic(out / "synthetic.tsv", pairs)
    plan_record = {
        "gamma": plan.gamma,
        "seed": plan.seed,
        "k": len(plan.beam_ids),
        "beam_count": len(plan.beam_ids),
        "sampling_count": len(plan.sampling_ids),
        "size": plan.size,
    }
    _write_text(out / "plan.json", json.dumps(plan_record, sort_keys=True, indent=2) + "\n")
    params = {"gamma": args.gamma, "beam_size": args.beam_size}
    inputs = {"mono": args.mono, "backward": args.backward}
    _emit_manifest(out, "manipulate", params, args.seed, inputs,
                   ["synthetic.tsv", "plan.json"], argv)
    return 0


def _generate_candidate_sets(args, inputs):
    mono = read_mono(args.mono)
    backward = _load_channel(args.backward)
    lm = _load_lm(args.lm)
    inputs.update({"mono": args.mono, "backward": args.backward, "lm": args.lm})
    sets = []
    for i, y in enumerate(mono.sentences):
        stream = sentence_stream(args.seed, i)
        sets.append(sample_candidate_set(backward, lm, y, args.num_candidates, stream, target_id=i))
    return sets


def _cmd_score(args, argv) -> int:
    inputs: dict = {}
    if args.candidates:
        sets = read_candidate_records(args.candidates)
        inputs["candidates"] = args.candidates
    else:
        if not (args.mono and args.backward and args.lm):
            raise ConfigError("score needs --candidates, or --mono with --backward and --lm")
        _require_seed(args)
        sets = _generate_candidate_sets(args, inputs)
    params_obj = GammaParams(gamma=args.gamma)
    lines = []
    for cset in sets:
        dist = gamma_distribution(cset, params_obj)
        lines.append(f"{cset.target_id}\t" + " ".join(repr(p) for p in dist.probs))
    _write_text(args.out, "\n".join(lines) + ("\n" if lines else ""))
    outputs = [str(args.out)]
    if args.dump_candidates:
        write_candidate_records(args.dump_candidates, sets)
        outputs.append(str(args.dump_candidates))
    params = {"gamma": args.gamma, "num_candidates": args.num_candidates}
    _emit_manifest(args.out, "score", params, args.seed, inputs, outputs, argv)
    return 0


def _cmd_select(args, argv) -> int:
    sets = read_candidate_records(args.candidates)
    params_obj = GammaParams(gamma=args.gamma)
    if args.mode == "sample":
        _require_seed(args)
    pairs = []
    for cset in sets:
        if args.mode == "select":
            idx = gamma_select(cset, params_obj)
            provenance = "gamma-select"
        else:
            idx = gamma_sample(cset, params_obj, sentence_stream(args.seed, cset.target_id))
            provenance = "gamma-sample"
        pairs.append(
            SyntheticPair(cset.candidates[idx].tokens, cset.target_tokens, provenance)
        )
    write_synthetic(args.out, pairs)
    params = {"gamma": args.gamma, "mode": args.mode}
    _emit_manifest(args.out, "select", params, args.seed,
                   {"candidates": args.candidates}, [str(args.out)], argv)
    return 0


def _parse_config_text(text: str) -> ExperimentConfig:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()

    known = {
        "seeds", "strategies", "gamma_dm", "gamma_score", "num_candidates",
        "beam_size", "alpha", "lm_order", "source_vocab", "target_vocab",
        "min_len", "max_len", "noise", "bitext", "mono", "test",
    }
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    def get_int(key, default):
        return int(values.get(key, default))

    def get_float(key, default):
        return float(values.get(key, default))

    task = ToyTaskSpec(
        source_vocab_size=get_int("source_vocab", 20),
        target_vocab_size=get_int("target_vocab", 20),
        length_range=(get_int("min_len", 4), get_int("max_len", 12)),
        channel_noise=get_float("noise", 0.15),
        bitext_size=get_int("bitext", 2000),
        mono_size=get_int("mono", 2000),
        test_size=get_int("test", 400),
    )
    seeds = tuple(int(s) for s in values.get("seeds", "1 2 3 4 5").split())
    gamma_dm = get_float("gamma_dm", DEFAULT_GAMMA_SPLIT)
    gamma_score = get_float("gamma_score", DEFAULT_GAMMA_SCORE)
    num_candidates = get_int("num_candidates", DEFAULT_NUM_CANDIDATES)
    makers = {
        "none": BTStrategy.none,
        "beam": BTStrategy.beam,
        "beam-weak": BTStrategy.beam_weak,
        "sampling": BTStrategy.sampling,
        "data-manipulation": lambda: BTStrategy.data_manipulation(gamma=gamma_dm),
        "gamma-select": lambda: BTStrategy.gamma_select(gamma_score, num_candidates),
        "gamma-sample": lambda: BTStrategy.gamma_sample(gamma_score, num_candidates),
    }
    names = values.get("strategies", "beam sampling").split()
    try:
        strategies = tuple(makers[name]() for name in names)
    except KeyError as exc:
        raise ConfigError(f"unknown strategy {exc.args[0]!r}") from exc
    return ExperimentConfig(
        task=task,
        strategies=strategies,
        seeds=seeds,
        beam_size=get_int("beam_size", DEFAULT_BEAM_SIZE),
        alpha=get_float("alpha", 0.1),
        lm_order=get_int("lm_order", 2),
    )


def _cmd_bt_experiment(args, argv) -> int:
    config = _parse_config_text(Path(args.config).read_text())
    report = run_bt_experiment(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "report.txt", report.render())
    records = "".join(json.dumps(r, sort_keys=True) + "\n" for r in report.to_records())
    _write_text(out / "report.jsonl", records)
    _emit_manifest(out, "bt-experiment", {"config": str(args.config)}, None,
                   {"config": args.config}, ["report.txt", "report.jsonl"], argv)
    return 0


def _cmd_analyze(args, argv) -> int:
    synthetic = read_synthetic(args.synthetic)
    backward = _load_channel(args.backward)
    lm = _load_lm(args.lm)
    inputs = {"synthetic": args.synthetic, "backward": args.backward, "lm": args.lm}
    references = None
    if args.references:
        references = read_parallel(args.references).sources()
        inputs["references"] = args.references
    quality = corpus_quality_report(synthetic, backward, references)
    importance = corpus_importance_report(synthetic, lm, backward)
    sources = [p.source for p in synthetic]
    profile = corpus_profile(sources)
    vocab = sorted({tok for s in sources for tok in s}, key=str)
    spectrum = singular_spectrum(sentence_representation_matrix(sources, vocab))

    lines = [
        f"pairs             {len(synthetic)}",
        f"mean_log_q        {quality.mean_log_q:.6f}",
        f"mean_log_imp      {importance.mean_log_importance:.6f}",
        f"synthetic_bleu    "
        + ("-" if quality.bleu_vs_reference is None else f"{quality.bleu_vs_reference:.4f}"),
        f"vocab_size        {profile.vocab_size}",
        f"spectral_entropy  {spectrum.normalized_spectral_entropy:.6f}",
    ]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "report.txt", "\n".join(lines) + "\n")
    record = {
        "pairs": len(synthetic),
        "mean_log_q": quality.mean_log_q,
        "mean_log_importance": importance.mean_log_importance,
        "synthetic_bleu": quality.bleu_vs_reference,
        "vocab_size": profile.vocab_size,
        "length_histogram": {str(k): v for k, v in profile.length_histogram.items()},
        "token_frequency_histogram": {str(k): v for k, v in profile.token_frequency_histogram.items()},
        "spectral_entropy": spectrum.normalized_spectral_entropy,
    }
    _write_text(out / "records.jsonl", json.dumps(record, sort_keys=True) + "\n")
    outputs = ["report.txt", "records.jsonl"]
    if args.spectrum:
        spec_lines = [f"{i}\t{repr(v)}" for i, v in enumerate(spectrum.singular_values)]
        _write_text(out / "spectrum.txt", "\n".join(spec_lines) + "\n")
        outputs.append("spectrum.txt")
    _emit_manifest(out, "analyze", {"spectrum": bool(args.spectrum)}, None, inputs, outputs, argv)
    return 0


def _cmd_oracle(args, argv) -> int:
    if args.task != "tiny":
        raise ConfigError(f"unknown oracle task {args.task!r}")
    spec = TINY_TASK.with_seed(args.seed)
    task = generate_toy_task(spec)
    backward = train_channel(task.bitext, "target_to_source", args.alpha,
                             out_vocab=task.source_vocab)
    forward = train_channel(task.bitext, "source_to_target", args.alpha,
                            out_vocab=task.target_vocab)
    lm = train_ngram_lm(task.bitext.sources(), args.order, args.alpha,
                        vocab=task.source_vocab)
    targets = task.mono.sentences[: args.num_targets]
    rows = ["target_id\tlength\texact_log_marginal\tjensen_bound\tmc_estimate\tmc_std_error"]
    for i, y in enumerate(targets):
        result = evaluate_marginal_oracles(
            lm, backward, forward, y, args.samples, sentence_stream(args.seed, i)
        )
        rows.append(
            f"{i}\t{len(y)}\t{repr(result.exact_log_marginal)}\t{repr(result.jensen_bound)}"
            f"\t{repr(result.mc_estimate)}\t{repr(result.mc_std_error)}"
        )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "oracle.tsv", "\n".join(rows) + "\n")
    params = {
        "task": args.task, "num_targets": args.num_targets, "samples": args.samples,
        "order": args.order, "alpha": args.alpha,
    }
    _emit_manifest(out, "oracle", params, args.seed, {}, ["oracle.tsv"], argv)
    return 0


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="btfactors",
        description="Back-translation synthetic-data toolkit (toy-task scale).",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("toygen", help="generate a seeded toy translation task")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--source-vocab", type=int, default=20)
    p.add_argument("--target-vocab", type=int, default=20)
    p.add_argument("--min-len", type=int, default=4)
    p.add_argument("--max-len", type=int, default=12)
    p.add_argument("--noise", type=float, default=0.15)
    p.add_argument("--bitext", type=int, default=2000)
    p.add_argument("--mono", type=int, default=2000)
    p.add_argument("--test", type=int, default=400)
    p.set_defaults(func=_cmd_toygen)

    p = sub.add_parser("train", help="train a channel model or language model")
    p.add_argument("--kind", choices=("backward", "forward", "lm"), required=True)
    p.add_argument("--bitext", required=True)
    p.add_argument("--synthetic", help="synthetic corpus to add (kind=forward)")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("backtranslate", help="synthesize one source per target sentence")
    p.add_argument("--mono", required=True)
    p.add_argument("--backward", required=True)
    p.add_argument("--strategy", required=True,
                   choices=("beam", "sampling", "gamma-select", "gamma-sample"))
    p.add_argument("--lm", help="source LM (gamma strategies)")
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA_SCORE)
    p.add_argument("--num-candidates", type=int, default=DEFAULT_NUM_CANDIDATES)
    p.add_argument("--beam-size", type=int, default=DEFAULT_BEAM_SIZE)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_backtranslate)

    p = sub.add_parser("manipulate", help="beam/sampling split synthesis at ratio gamma")
    p.add_argument("--mono", required=True)
    p.add_argument("--backward", required=True)
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA_SPLIT)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--beam-size", type=int, default=DEFAULT_BEAM_SIZE)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_manipulate)

    p = sub.add_parser("score", help="Gamma score distributions for candidate sets")
    p.add_argument("--candidates", help="existing candidate records")
    p.add_argument("--mono")
    p.add_argument("--backward")
    p.add_argument("--lm")
    p.add_argument("--num-candidates", type=int, default=DEFAULT_NUM_CANDIDATES)
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA_SCORE)
    p.add_argument("--seed", type=int)
    p.add_argument("--dump-candidates", help="also write the generated candidate records")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("select", help="pick one candidate per record by Gamma score")
    p.add_argument("--candidates", required=True)
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA_SCORE)
    p.add_argument("--mode", choices=("select", "sample"), default="select")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("bt-experiment", help="sweep strategies x seeds on toy tasks")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_bt_experiment)

    p = sub.add_parser("analyze", help="diagnostics for a synthetic corpus")
    p.add_argument("--synthetic", required=True)
    p.add_argument("--backward", required=True)
    p.add_argument("--lm", required=True)
    p.add_argument("--references")
    p.add_argument("--spectrum", action="store_true", help="dump (index, value) spectrum pairs")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("oracle", help="exact marginal / bound / MC table on the tiny task")
    p.add_argument("--task", default="tiny")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--num-targets", type=int, default=20)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_oracle)

    return parser


def dispatch(argv) -> int:
    """Run one command; returns the process exit status.

    Usage errors exit 2 (argparse convention); domain errors print a
    single-line diagnostic and exit 1.
    """
    argv = [str(a) for a in argv]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except BtfactorsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def rerun_from_manifest(manifest_path) -> int:
    """Re-drive a command from its stored argv."""
    manifest = read_manifest(manifest_path)
    return dispatch(manifest.argv)


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
