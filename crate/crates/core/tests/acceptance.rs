//! Acceptance suite. One line per criterion; exits nonzero if any fails.
//!
//! Run with `cargo test -p coderag-core --test acceptance`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use coderag_core::chunker::{chunk_document, chunk_fixed, ChunkPolicy, StructuralKind};
use coderag_core::embedding::{EmbedderConfig, EmbeddingVector};
use coderag_core::engine::{BuildConfig, Engine};
use coderag_core::eval::{aggregate, evaluate, load_dataset, load_transcripts, Outcome};
use coderag_core::index::{idf, tokenize, Bm25Params, LexicalIndex};
use coderag_core::ingest::{DocKind, Document};
use coderag_core::retrieval::fusion::fused_score;
use coderag_core::retrieval::{fuse_hybrid, mmr_select_by_similarity, Mode, RetrievalConfig, RetrieveResult};
use coderag_core::server::handle_line;
use coderag_core::snapshot::{load_snapshot, save_snapshot};
use coderag_core::Exec;

const MMR_TRIALS: usize = 1000;
const MMR_BUDGET: Duration = Duration::from_secs(5);
const ORACLE_FIXTURES: usize = 100;
const BM25_TOL: f64 = 1e-4;
const FUSION_TOL: f64 = 1e-12;
const RATE_TOL: f64 = 1e-12;
const CHUNK_DOCS: usize = 500;
const RPC_CALLS: usize = 100;
const SCALE_FILES: usize = 200;
const SCALE_QUERIES: usize = 20;
const SCALE_BUDGET: Duration = Duration::from_secs(10);
const RECALL_K: usize = 5;

type Check = Result<String, String>;
type InventoryEntry = (String, Option<String>, Option<String>);
type Criterion = (&'static str, fn() -> Check);
type RunOutput = (String, BTreeMap<String, Vec<u8>>, Duration);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn doc(id: &str, kind: DocKind, content: &str) -> Document {
    Document {
        doc_id: id.into(),
        path: id.into(),
        kind,
        content: content.into(),
        repo_rev: None,
    }
}

fn build_config(dim: usize) -> BuildConfig {
    BuildConfig {
        embedder: EmbedderConfig::deterministic(dim),
        ..BuildConfig::default()
    }
}

fn retrieval(mode: Mode, k: usize, lambda: f64, alpha: f64) -> RetrievalConfig {
    RetrievalConfig {
        mode,
        k,
        lambda,
        alpha,
        ..RetrievalConfig::default()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn oracle_cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    let (a, b) = (a.values(), b.values());
    dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())
}

/// Brute-force greedy MMR straight from the definition.
fn oracle_mmr(ids: &[String], q: &[f64], sim: &[Vec<f64>], lambda: f64, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
    let mut chosen: Vec<usize> = Vec::new();
    while chosen.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for &i in order.iter().filter(|i| !chosen.contains(i)) {
            let red = chosen.iter().map(|&s| sim[i][s]).reduce(f64::max).unwrap_or(0.0);
            let score = lambda * q[i] - (1.0 - lambda) * red;
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((i, score));
            }
        }
        chosen.push(best.unwrap().0);
    }
    chosen
}

#[allow(clippy::needless_range_loop)]
fn ac2_mmr_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let mut ties = 0;
    for trial in 0..MMR_TRIALS {
        let n = rng.gen_range(1..=8);
        let k = rng.gen_range(1..=n.min(4));
        let lambda = match rng.gen_range(0..6) {
            0 => 0.0,
            1 => 1.0,
            2 => 0.5,
            _ => rng.gen_range(0.0..=1.0),
        };
        let coarse = trial % 2 == 0;
        let draw = |rng: &mut ChaCha8Rng| {
            if coarse {
                f64::from(rng.gen_range(-2i32..=4)) / 4.0
            } else {
                rng.gen_range(-1.0..=1.0)
            }
        };
        let mut labels: Vec<usize> = (0..n).collect();
        labels.shuffle(&mut rng);
        let ids: Vec<String> = labels.iter().map(|l| format!("doc{l}.py#0")).collect();
        let q: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let mut sim = vec![vec![1.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let s = draw(&mut rng);
                sim[i][j] = s;
                sim[j][i] = s;
            }
        }
        if coarse {
            let mut sorted = q.clone();
            sorted.sort_by(f64::total_cmp);
            ties += usize::from(sorted.windows(2).any(|w| w[0] == w[1]));
        }
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let got = mmr_select_by_similarity(&refs, &q, |i, j| sim[i][j], lambda, k)
            .map_err(|e| format!("trial {trial}: {e}"))?;
        let want = oracle_mmr(&ids, &q, &sim, lambda, k);
        ensure(got == want, || format!("trial {trial}: got {got:?}, oracle {want:?}"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < MMR_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{MMR_TRIALS}/{MMR_TRIALS} selections equal the brute-force oracle ({ties} with tied relevance), {:.3} s",
        elapsed.as_secs_f64()
    ))
}

const VOCAB: [&str; 36] = [
    "circuit",
    "qubit",
    "gate",
    "measure",
    "noise",
    "channel",
    "backend",
    "numpy",
    "tensor",
    "state",
    "vector",
    "density",
    "matrix",
    "hamiltonian",
    "energy",
    "optimizer",
    "callback",
    "shots",
    "frequencies",
    "probabilities",
    "set_backend",
    "add_gate",
    "execute",
    "transpile",
    "unitary",
    "hadamard",
    "cnot",
    "rotation",
    "angle",
    "parameter",
    "trotter",
    "evolution",
    "qft",
    "grover",
    "oracle",
    "sampler",
];

fn random_words(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> String {
    let n = rng.gen_range(lo..=hi);
    (0..n)
        .map(|_| *VOCAB.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Oracle BM25 (Lucene idf, k1 1.2, b 0.75) over the engine's token streams.
fn oracle_bm25(docs: &[(String, Vec<String>)], query: &[String]) -> BTreeMap<String, f64> {
    let (k1, b) = (1.2, 0.75);
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(|(_, t)| t.len() as f64).sum::<f64>() / n;
    let mut out = BTreeMap::new();
    for (id, toks) in docs {
        let mut score = 0.0;
        let mut hit = false;
        for q in query {
            let df = docs.iter().filter(|(_, t)| t.contains(q)).count() as f64;
            let tf = toks.iter().filter(|t| *t == q).count() as f64;
            if tf == 0.0 {
                continue;
            }
            hit = true;
            let w = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            score += w * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * toks.len() as f64 / avgdl));
        }
        if hit {
            out.insert(id.clone(), score);
        }
    }
    out
}

fn desc_by_score(scores: &[(String, f64)]) -> Vec<String> {
    let mut v = scores.to_vec();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.into_iter().map(|(id, _)| id).collect()
}

fn ac3_degenerate_weights() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for fx in 0..ORACLE_FIXTURES {
        let n_docs = rng.gen_range(6..=40);
        let docs: Vec<Document> = (0..n_docs)
            .map(|i| {
                doc(
                    &format!("d{i:02}.md"),
                    DocKind::Markdown,
                    &random_words(&mut rng, 3, 40),
                )
            })
            .collect();
        let engine = Engine::from_documents(&docs, build_config(64), None, Exec::default())
            .map_err(|e| format!("fixture {fx}: {e}"))?;
        let chunks = engine.corpus().chunks();
        ensure(chunks.len() == n_docs, || {
            format!("fixture {fx}: one chunk per doc expected")
        })?;
        let query = random_words(&mut rng, 1, 3);
        let qvec = engine
            .embedder()
            .embed_batch(&[&query])
            .map_err(|e| e.to_string())?
            .remove(0);
        let cos: Vec<(String, f64)> = engine
            .corpus()
            .vectors()
            .entries()
            .map(|(id, v)| (id.to_string(), oracle_cosine(v, &qvec)))
            .collect();
        let by_cos = desc_by_score(&cos);
        let k = RECALL_K.min(n_docs);
        let ids = |cfg: &RetrievalConfig| -> Result<Vec<String>, String> {
            let hits = engine
                .retrieve_with(&query, cfg)
                .map_err(|e| format!("fixture {fx}: {e}"))?;
            Ok(hits.into_iter().map(|h| h.chunk_id).collect())
        };

        let sem = ids(&retrieval(Mode::Semantic, k, 1.0, 0.5))?;
        ensure(sem == by_cos[..k], || {
            format!("fixture {fx}: lambda=1 {sem:?} vs cosine {:?}", &by_cos[..k])
        })?;

        let vec_only = ids(&retrieval(Mode::Hybrid, k, 0.5, 0.0))?;
        ensure(vec_only == by_cos[..k], || {
            format!("fixture {fx}: alpha=0 {vec_only:?} vs {:?}", &by_cos[..k])
        })?;

        let toks: Vec<(String, Vec<String>)> = chunks.iter().map(|c| (c.chunk_id.clone(), tokenize(&c.text))).collect();
        let bm25: Vec<(String, f64)> = oracle_bm25(&toks, &tokenize(&query)).into_iter().collect();
        let by_bm25 = desc_by_score(&bm25);
        let hits = engine
            .retrieve_with(&query, &retrieval(Mode::Hybrid, k, 0.5, 1.0))
            .map_err(|e| e.to_string())?;
        let lex = by_bm25.len().min(k);
        let got: Vec<&str> = hits[..lex].iter().map(|h| h.chunk_id.as_str()).collect();
        ensure(got == by_bm25[..lex], || {
            format!("fixture {fx}: alpha=1 {got:?} vs bm25 {:?}", &by_bm25[..lex])
        })?;
        ensure(hits[lex..].iter().all(|h| h.fused == 0.0), || {
            format!("fixture {fx}: non-lexical hit scored")
        })?;
    }
    Ok(format!(
        "{ORACLE_FIXTURES} fixtures: lambda=1, alpha=1 and alpha=0 match the cosine and BM25 oracles"
    ))
}

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn ac4_bm25() -> Check {
    let docs = vec![
        ("D1".to_string(), toks("hadamard gate circuit")),
        ("D2".to_string(), toks("measure qubit circuit circuit")),
        ("D3".to_string(), toks("noise channel")),
    ];
    let index = LexicalIndex::from_tokens(docs, Bm25Params::default()).map_err(|e| e.to_string())?;
    let scores = index.bm25_scores(&toks("circuit"));
    let (d1, d2) = (scores.get("D1").copied(), scores.get("D2").copied());
    ensure(!scores.contains_key("D3"), || "D3 scored".into())?;
    ensure(d1.is_some_and(|s| (s - 0.4700).abs() < BM25_TOL), || {
        format!("D1 = {d1:?}")
    })?;
    ensure(d2.is_some_and(|s| (s - 0.5908).abs() < BM25_TOL), || {
        format!("D2 = {d2:?}")
    })?;

    for n in 1..=500 {
        for nq in 0..=n {
            let w = idf(n, nq);
            ensure(w >= 0.0 && w.is_finite(), || format!("idf({n}, {nq}) = {w}"))?;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut probes = 0;
    for _ in 0..200 {
        let n_docs = rng.gen_range(2..=12);
        let mut docs: Vec<(String, Vec<String>)> = (0..n_docs)
            .map(|i| (format!("d{i}"), toks(&random_words(&mut rng, 1, 20))))
            .collect();
        let term = VOCAB.choose(&mut rng).unwrap().to_string();
        let target = rng.gen_range(0..n_docs);
        if !docs[target].1.contains(&term) {
            docs[target].1.push(term.clone());
        }
        let before = LexicalIndex::from_tokens(docs.clone(), Bm25Params::default()).map_err(|e| e.to_string())?;
        let s0 = before.bm25_scores(std::slice::from_ref(&term))[&docs[target].0];
        // replace a non-matching token so length and df stay fixed
        if let Some(pos) = docs[target].1.iter().position(|t| *t != term) {
            docs[target].1[pos] = term.clone();
            let after = LexicalIndex::from_tokens(docs.clone(), Bm25Params::default()).map_err(|e| e.to_string())?;
            let s1 = after.bm25_scores(std::slice::from_ref(&term))[&docs[target].0];
            ensure(s1 >= s0, || format!("tf up but score {s0} -> {s1}"))?;
            probes += 1;
        }
    }
    Ok(format!(
        "fixture D1 {:.6}, D2 {:.6}, D3 absent; idf >= 0 for N <= 500; tf monotone over {probes} probes",
        d1.unwrap(),
        d2.unwrap()
    ))
}

fn ac5_fusion() -> Check {
    let example = fused_score(0.5, 1.0, 3, 4);
    ensure((example - 0.625).abs() < FUSION_TOL, || {
        format!("worked example gives {example}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    for trial in 0..1000 {
        let n = rng.gen_range(1..=60);
        let alpha = rng.gen_range(0.0..=1.0);
        let m = rng.gen_range(1..=30);
        let docs: Vec<Document> = (0..n)
            .map(|i| {
                doc(
                    &format!("f{i:02}.md"),
                    DocKind::Markdown,
                    &random_words(&mut rng, 2, 12),
                )
            })
            .collect();
        let engine =
            Engine::from_documents(&docs, build_config(16), None, Exec::Sequential).map_err(|e| e.to_string())?;
        let query = random_words(&mut rng, 1, 2);
        let qvec = engine
            .embedder()
            .embed_batch(&[&query])
            .map_err(|e| e.to_string())?
            .remove(0);
        let vr = engine
            .corpus()
            .vectors()
            .vector_ranking(&qvec, Exec::Sequential)
            .map_err(|e| e.to_string())?;
        let bm25 = engine.corpus().lexical().bm25_scores(&tokenize(&query));
        let mut batch: Vec<(&String, f64)> = bm25.iter().map(|(k, &v)| (k, v)).collect();
        batch.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        batch.truncate(m);
        let max = batch.first().map_or(0.0, |b| b.1);
        for e in fuse_hybrid(&bm25, &vr, alpha, m) {
            let lex = batch
                .iter()
                .find(|b| *b.0 == e.chunk_id)
                .map_or(0.0, |b| if max > 0.0 { b.1 / max } else { 0.0 });
            let want = alpha * lex + (1.0 - alpha) * (1.0 - e.vector_rank as f64 / n as f64);
            ensure((0.0..=1.0).contains(&e.fused), || {
                format!("trial {trial}: fused {} out of range", e.fused)
            })?;
            ensure((e.fused - want).abs() < FUSION_TOL, || {
                format!("trial {trial}: {} vs {want}", e.fused)
            })?;
            checked += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let docs: Vec<Document> = ["a", "b", "c"]
        .iter()
        .map(|id| doc(id, DocKind::Markdown, &random_words(&mut rng, 3, 6)))
        .collect();
    let engine = Engine::from_documents(&docs, build_config(16), None, Exec::Sequential).map_err(|e| e.to_string())?;
    let qvec = engine
        .embedder()
        .embed_batch(&["qubit"])
        .map_err(|e| e.to_string())?
        .remove(0);
    let vr = engine
        .corpus()
        .vectors()
        .vector_ranking(&qvec, Exec::Sequential)
        .map_err(|e| e.to_string())?;
    let zero: BTreeMap<String, f64> = vr.iter().take(2).map(|h| (h.chunk_id.clone(), 0.0)).collect();
    for e in fuse_hybrid(&zero, &vr, 0.7, 24) {
        ensure(e.bm25_norm == 0.0, || {
            format!("zero-max batch normalized {} to {}", e.chunk_id, e.bm25_norm)
        })?;
    }
    Ok(format!(
        "example 0.625 exact; {checked} fused entries in [0, 1] and equal to the formula; zero-max batch ok"
    ))
}

const ALPHABET: [char; 16] = [
    'a', 'b', 'x', 'Z', '0', ' ', ' ', '\n', '\t', 'é', 'ß', '漢', '字', '🚀', '∑', '_',
];

fn ac6_chunking() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut total = 0;
    for i in 0..CHUNK_DOCS {
        let len = rng.gen_range(1..=2000);
        let content: String = (0..len).map(|_| *ALPHABET.choose(&mut rng).unwrap()).collect();
        let window = rng.gen_range(2..=300);
        let overlap = rng.gen_range(0..window);
        let d = doc(&format!("r{i}.md"), DocKind::Markdown, &content);
        let chunks = chunk_fixed(&d, window, overlap).map_err(|e| format!("doc {i}: {e}"))?;
        let chars: Vec<char> = content.chars().collect();
        let byte_at: Vec<usize> = content.char_indices().map(|(b, _)| b).chain([content.len()]).collect();
        let mut rebuilt = String::new();
        let mut prev_end = 0;
        for c in &chunks {
            let (s, e) = (c.span.start, c.span.end);
            ensure(e <= chars.len() && s < e, || format!("doc {i}: bad span {s}-{e}"))?;
            ensure(c.text.as_bytes() == &content.as_bytes()[byte_at[s]..byte_at[e]], || {
                format!("doc {i}: chunk {s}-{e} is not a byte-exact slice")
            })?;
            ensure(s <= prev_end, || format!("doc {i}: gap before {s}"))?;
            rebuilt.extend(&chars[prev_end.max(s)..e]);
            prev_end = e;
        }
        ensure(rebuilt == content, || {
            format!("doc {i}: overlap-aware concatenation differs")
        })?;
        total += chunks.len();
    }

    let dir = fixtures().join("structural");
    let inventory: BTreeMap<String, Vec<InventoryEntry>> =
        serde_json::from_str(&fs::read_to_string(dir.join("inventory.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let policy = ChunkPolicy::default();
    let mut decls = 0;
    for (file, want) in &inventory {
        let content = fs::read_to_string(dir.join(file)).map_err(|e| format!("{file}: {e}"))?;
        let d = doc(file, DocKind::Code, &content);
        let chunks = chunk_document(&d, &policy).map_err(|e| format!("{file}: {e}"))?;
        let got: Vec<InventoryEntry> = chunks
            .iter()
            .map(|c| {
                let kind = serde_json::to_value(c.meta.structural_kind).unwrap();
                (
                    kind.as_str().unwrap().to_string(),
                    c.meta.symbol_name.clone(),
                    c.meta.parent_symbol.clone(),
                )
            })
            .collect();
        ensure(&got == want, || format!("{file}: got {got:?}"))?;
        for c in &chunks {
            let slice: String = content.chars().skip(c.span.start).take(c.span.len()).collect();
            ensure(slice == c.text, || {
                format!("{file}: {} text is not its span", c.chunk_id)
            })?;
        }
        decls += chunks
            .iter()
            .filter(|c| c.meta.structural_kind != StructuralKind::Window)
            .count();
    }
    Ok(format!(
        "{CHUNK_DOCS} multibyte docs ({total} windows) slice-exact and reconstructible; {} structural files ({decls} declarations) match the hand inventory",
        inventory.len()
    ))
}

const RARE: [&str; 10] = [
    "qft_rotation_ladder",
    "hadamard_sandwich_depth",
    "trotter_slice_budget",
    "pauli_frame_cache",
    "ising_bond_scaler",
    "grover_oracle_mask",
    "vqe_ansatz_warmstart",
    "shot_noise_sampler",
    "clifford_tableau_merge",
    "bloch_sphere_tracker",
];

const FILLER: [&str; 12] = [
    "    values = [item for item in items if item is not None]\n",
    "    total = sum(values) / max(len(values), 1)\n",
    "    result.append(total * weight)\n",
    "    if verbose:\n        print(\"step\", index, total)\n",
    "    weight = weight * 0.5 + offset\n",
    "    index += 1\n",
    "    for entry in table:\n        entry.update(config)\n",
    "    buffer = list(reversed(buffer))\n",
    "    assert len(buffer) >= 0\n",
    "    offset = config.get(\"offset\", 0)\n",
    "    table = dict(zip(keys, values))\n",
    "    return_value = (result, table)\n",
];

/// Ten long targets each holding one rare identifier, and forty short
/// glossary decoys that spell several identifiers run together. Decoys are
/// trigram-close to the queries but share no token with them.
fn recall_corpus(rng: &mut ChaCha8Rng) -> Vec<Document> {
    let mut docs = Vec::new();
    for (t, ident) in RARE.iter().enumerate() {
        let mut body = format!("def routine_{t}(items, config, keys):\n    {ident} = config\n");
        while body.chars().count() < 2000 {
            body.push_str(FILLER.choose(rng).unwrap());
        }
        body.push_str("    return result\n");
        docs.push(doc(&format!("pkg/target_{t}.py"), DocKind::Code, &body));
    }
    for d in 0..40 {
        let mut forms: Vec<String> = (0..RARE.len())
            .filter(|i| (i + d) % RARE.len() < 7)
            .map(|i| RARE[i].replace('_', ""))
            .collect();
        forms.shuffle(rng);
        docs.push(doc(
            &format!("docs/glossary_{d:02}.md"),
            DocKind::Markdown,
            &format!("See {}.\n", forms.join(", ")),
        ));
    }
    docs
}

fn ac7_hybrid_recall() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let docs = recall_corpus(&mut rng);
    let engine = Engine::from_documents(&docs, build_config(384), None, Exec::default()).map_err(|e| e.to_string())?;
    ensure(engine.corpus().len() == 50, || {
        format!("{} chunks, expected 50", engine.corpus().len())
    })?;
    let recall = |mode: Mode| -> Result<f64, String> {
        let mut found = 0;
        for (t, ident) in RARE.iter().enumerate() {
            let hits = engine
                .retrieve_with(ident, &retrieval(mode, RECALL_K, 0.5, 0.5))
                .map_err(|e| e.to_string())?;
            let want = format!("pkg/target_{t}.py");
            found += usize::from(hits.iter().any(|h| h.path == want));
        }
        Ok(found as f64 / RARE.len() as f64)
    };
    let (hybrid, semantic) = (recall(Mode::Hybrid)?, recall(Mode::Semantic)?);
    ensure(hybrid == 1.0 && semantic <= 0.5, || {
        format!("hybrid recall@5 {hybrid}, semantic recall@5 {semantic}")
    })?;
    Ok(format!(
        "rare identifiers: hybrid recall@5 {hybrid:.2}, semantic recall@5 {semantic:.2}"
    ))
}

fn read_tree(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let e = e.map_err(|e| e.to_string())?;
        out.insert(
            e.file_name().to_string_lossy().into_owned(),
            fs::read(e.path()).map_err(|e| e.to_string())?,
        );
    }
    Ok(out)
}

fn rpc_lines(rng: &mut ChaCha8Rng) -> Vec<String> {
    (0..RPC_CALLS)
        .map(|i| {
            let mode = if i % 2 == 0 { "semantic" } else { "hybrid" };
            let q = random_words(rng, 1, 4);
            json!({"jsonrpc": "2.0", "id": i, "method": "retrieve",
                   "params": {"query": q, "k": rng.gen_range(1..=8), "mode": mode}})
            .to_string()
        })
        .collect()
}

fn replay(engine: &Engine, lines: &[String]) -> Vec<String> {
    lines
        .iter()
        .map(|l| handle_line(engine, l).unwrap_or_default())
        .collect()
}

fn ac8_snapshot_and_rpc() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    generate_repo(root.path(), 60, &mut rng)?;
    let (engine, _) =
        Engine::build(root.path(), build_config(64), Some("v0.2.9"), Exec::default()).map_err(|e| e.to_string())?;
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (out.path().join("a"), out.path().join("b"));
    save_snapshot(&engine, &a).map_err(|e| e.to_string())?;
    let loaded = load_snapshot(&a, None, Exec::default()).map_err(|e| e.to_string())?;
    save_snapshot(&loaded, &b).map_err(|e| e.to_string())?;
    ensure(read_tree(&a)? == read_tree(&b)?, || {
        "save -> load -> save is not byte-identical".into()
    })?;

    let lines = rpc_lines(&mut rng);
    let first = replay(&loaded, &lines);
    let reloaded = load_snapshot(&a, None, Exec::Sequential).map_err(|e| e.to_string())?;
    ensure(first == replay(&loaded, &lines), || {
        "replay differs on the same engine".into()
    })?;
    ensure(first == replay(&reloaded, &lines), || {
        "replay differs after a second load".into()
    })?;
    ensure(first == replay(&engine, &lines), || {
        "loaded engine differs from the in-memory one".into()
    })?;
    let ok = first.iter().filter(|r| r.contains("\"result\"")).count();
    ensure(ok == RPC_CALLS, || format!("{ok}/{RPC_CALLS} calls succeeded"))?;

    let code = |line: &str| -> Option<i64> {
        let v: Value = serde_json::from_str(&handle_line(&loaded, line)?).ok()?;
        v["error"]["code"].as_i64()
    };
    let cases = [
        ("{\"jsonrpc\":", -32700),
        (r#"{"id":1,"method":"retrieve"}"#, -32600),
        (r#"{"jsonrpc":"2.0","id":1,"method":"search"}"#, -32601),
        (
            r#"{"jsonrpc":"2.0","id":1,"method":"retrieve","params":{"query":""}}"#,
            -32602,
        ),
        (
            r#"{"jsonrpc":"2.0","id":1,"method":"retrieve","params":{"query":"x","k":"five"}}"#,
            -32602,
        ),
    ];
    for (line, want) in cases {
        ensure(code(line) == Some(want), || {
            format!("{line} -> {:?}, want {want}", code(line))
        })?;
    }
    Ok(format!(
        "{} chunks: snapshot round trip byte-identical; {RPC_CALLS} replayed calls identical across runs and loads; error codes ok",
        engine.corpus().len()
    ))
}

fn ac9_eval() -> Check {
    let dir = fixtures().join("eval20");
    let items = load_dataset(&dir.join("dataset.json")).map_err(|e| e.to_string())?;
    let transcripts = load_transcripts(&dir.join("transcripts")).map_err(|e| e.to_string())?;
    let labels: Value = serde_json::from_str(&fs::read_to_string(dir.join("labels.json")).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let verdicts = evaluate(&items, &transcripts, Exec::default());
    let mut agree = 0;
    for v in &verdicts {
        let want = &labels["outcomes"][&v.item_id];
        let got = serde_json::to_value(v.outcome).map_err(|e| e.to_string())?;
        ensure(&got == want, || format!("{}: {got} vs label {want}", v.item_id))?;
        agree += 1;
    }
    let report = aggregate(&items, &verdicts, &transcripts).map_err(|e| e.to_string())?;
    let tally = &labels["tally"];
    let counts = serde_json::to_value(report.overall.counts).map_err(|e| e.to_string())?;
    ensure(counts == tally["counts"], || {
        format!("counts {counts} vs {}", tally["counts"])
    })?;
    for (cat, want) in tally["per_category"].as_object().unwrap() {
        let got = report
            .per_category
            .iter()
            .find(|(c, _)| serde_json::to_value(c).ok().as_ref().and_then(Value::as_str) == Some(cat.as_str()))
            .map(|(_, r)| serde_json::to_value(r.counts).unwrap());
        ensure(got.as_ref() == Some(want), || format!("{cat}: {got:?} vs {want}"))?;
    }
    let lint = tally["lint_sum"].as_f64().unwrap() / tally["lint_n"].as_f64().unwrap();
    ensure(report.overall.mean_lint == Some(lint), || {
        format!("mean lint {:?} vs {lint}", report.overall.mean_lint)
    })?;
    let mut rows = vec![&report.overall];
    rows.extend(report.per_category.values());
    for r in rows {
        let sum = r.accuracy + r.logical_error_rate + r.hallucination_rate + r.execution_error_rate;
        ensure((sum - 1.0).abs() < RATE_TOL, || format!("rates sum to {sum}"))?;
    }
    let correct = verdicts.iter().filter(|v| v.outcome == Outcome::Correct).count();
    Ok(format!(
        "{agree}/{} verdicts agree with labels; tally and per-category counts equal; accuracy {:.2} ({correct} correct); rates sum to 1",
        items.len(),
        report.overall.accuracy
    ))
}

const MODULE_WORDS: [&str; 16] = [
    "circuit",
    "gates",
    "noise",
    "backend",
    "optimizer",
    "hamiltonian",
    "callbacks",
    "measure",
    "states",
    "transpiler",
    "models",
    "result",
    "tensor",
    "config",
    "utils",
    "symbols",
];

fn generate_repo(root: &Path, n_files: usize, rng: &mut ChaCha8Rng) -> Result<(), String> {
    for f in 0..n_files {
        let stem = MODULE_WORDS.choose(rng).unwrap();
        let (rel, content) = match f % 10 {
            0..=7 => {
                let mut src = format!("\"\"\"{}.\"\"\"\nimport numpy as np\n\n", random_words(rng, 3, 8));
                for c in 0..rng.gen_range(0..3) {
                    src.push_str(&format!(
                        "\nclass {}{c}:\n    \"\"\"{}\"\"\"\n\n",
                        stem.to_uppercase(),
                        random_words(rng, 2, 6)
                    ));
                    src.push_str("    def __init__(self, nqubits):\n        self.nqubits = nqubits\n");
                    for m in 0..rng.gen_range(1..4) {
                        src.push_str(&format!(
                            "\n    def {}_{m}(self, {}):\n        return self.nqubits * {}\n",
                            VOCAB.choose(rng).unwrap(),
                            VOCAB.choose(rng).unwrap(),
                            rng.gen_range(1..9)
                        ));
                    }
                }
                for g in 0..rng.gen_range(1..4) {
                    src.push_str(&format!(
                        "\n\ndef {}_{g}(state):\n    # {}\n    return state\n",
                        VOCAB.choose(rng).unwrap(),
                        random_words(rng, 4, 12)
                    ));
                }
                (format!("src/{stem}/mod_{f:03}.py"), src)
            }
            8 => (
                format!("docs/{stem}_{f:03}.md"),
                format!("# {stem}\n\n{}\n", random_words(rng, 40, 200)),
            ),
            _ => (
                format!("docs/{stem}_{f:03}.rst"),
                format!("{stem}\n====\n\n{}\n", random_words(rng, 20, 120)),
            ),
        };
        let path = root.join(rel);
        fs::create_dir_all(path.parent().unwrap()).map_err(|e| e.to_string())?;
        fs::write(path, content).map_err(|e| e.to_string())?;
    }
    Ok(())
}

/// Full pipeline over a generated repository. Returns the query output,
/// the snapshot bytes and the wall time.
fn scale_run(root: &Path, queries: &[String]) -> Result<RunOutput, String> {
    let start = Instant::now();
    let (engine, _) = Engine::build(root, build_config(384), None, Exec::default()).map_err(|e| e.to_string())?;
    let mut out = String::new();
    for q in queries {
        for mode in [Mode::Semantic, Mode::Hybrid] {
            let hits = engine
                .retrieve_with(q, &retrieval(mode, 5, 0.5, 0.5))
                .map_err(|e| e.to_string())?;
            out.push_str(&serde_json::to_string(&RetrieveResult::new(&hits, mode)).map_err(|e| e.to_string())?);
            out.push('\n');
        }
    }
    let elapsed = start.elapsed();
    let snap = tempfile::tempdir().map_err(|e| e.to_string())?;
    save_snapshot(&engine, &snap.path().join("s")).map_err(|e| e.to_string())?;
    Ok((out, read_tree(&snap.path().join("s"))?, elapsed))
}

fn ac10_scale_determinism() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    generate_repo(root.path(), SCALE_FILES, &mut rng)?;
    let queries: Vec<String> = (0..SCALE_QUERIES).map(|_| random_words(&mut rng, 1, 5)).collect();
    let (out1, snap1, t1) = scale_run(root.path(), &queries)?;
    let (out2, snap2, t2) = scale_run(root.path(), &queries)?;
    ensure(out1 == out2, || "query output differs between runs".into())?;
    ensure(snap1 == snap2, || "snapshot bytes differ between runs".into())?;
    let worst = t1.max(t2);
    ensure(worst < SCALE_BUDGET, || format!("run took {worst:?}"))?;
    Ok(format!(
        "{SCALE_FILES} files, {} queries: two runs identical, slowest {:.2} s",
        2 * SCALE_QUERIES,
        worst.as_secs_f64()
    ))
}

fn main() -> ExitCode {
    println!(
        "N/A   AC-1  headline accuracy gains need the full benchmark with hosted generators; covered in parts by AC-2 to AC-9"
    );
    let checks: [Criterion; 9] = [
        ("AC-2 ", ac2_mmr_oracle),
        ("AC-3 ", ac3_degenerate_weights),
        ("AC-4 ", ac4_bm25),
        ("AC-5 ", ac5_fusion),
        ("AC-6 ", ac6_chunking),
        ("AC-7 ", ac7_hybrid_recall),
        ("AC-8 ", ac8_snapshot_and_rpc),
        ("AC-9 ", ac9_eval),
        ("AC-10", ac10_scale_determinism),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS  {name} {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name} {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed, 1 not applicable", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
