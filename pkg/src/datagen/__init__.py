from src.datagen.corpus import (
    CorpusSpec,
    build_corpus,
    desk_spec,
    full_spec,
    load_corpus_spec,
    read_corpus,
    split_train_test,
    write_corpus,
)
from src.datagen.normal import gen_alexa_like, gen_bambenek_like, gen_cz_like, load_normal
from src.datagen.tools import gen_dnscat2, gen_dnsexfiltrator, gen_failed_attempts, gen_iodine

__all__ = [
    "CorpusSpec",
    "build_corpus",
    "desk_spec",
    "full_spec",
    "load_corpus_spec",
    "read_corpus",
    "split_train_test",
    "write_corpus",
    "gen_alexa_like",
    "gen_bambenek_like",
    "gen_cz_like",
    "load_normal",
    "gen_dnscat2",
    "gen_dnsexfiltrator",
    "gen_failed_attempts",
    "gen_iodine",
]
