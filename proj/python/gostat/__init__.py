"""Python access to the gostat library and workspace stages."""

from ._gostat import (
    DataError,
    MissingDependency,
    SgfError,
    UsageError,
    __version__,
    analyze,
    canonical_sgf,
    detect_garbage_moves,
    detect_unstable_rounds,
    elo_expected,
    elo_fit,
    evaluate,
    evaluate_predictions,
    features,
    fingerprint,
    game_id,
    ingest,
    parse_sgf,
    rate,
    report,
    synth,
    train,
    verify_manifest,
    whr_fit,
)


def run_pipeline(root, engine="mock:seed=7", workers=1, systems=("elo", "trueskill", "whr")):
    """Run every stage after synth/ingest input is in place; returns {stage: log}."""
    logs = {}
    logs["ingest"] = ingest(root)[1]
    logs["analyze"] = analyze(root, engine, workers)[1]
    logs["features"] = features(root, workers)[1]
    logs["rate"] = rate(root, list(systems))[1]
    logs["train"] = train(root)[1]
    logs["evaluate"] = evaluate(root)[1]
    logs["report"] = report(root)[1]
    return logs
