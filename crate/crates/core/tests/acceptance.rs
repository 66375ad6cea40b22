//! Acceptance suite: one test per criterion, each printing a single
//! `ACCEPTANCE <n> <name>: PASS|FAIL` line (visible with --nocapture or
//! on failure). Oracles here are written independently of the library
//! internals they check.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sentigan::baselines::{
    compare_harness, f1_score, stratified_split, FeatureVector, HarnessConfig,
};
use sentigan::corpus::{
    synth_corpus, Comment, Corpus, Label, Post, SynthProfile, UserRecord, WindowSpec,
};
use sentigan::emotion::{
    emotion_counts, normalize_counts, score_text, synth_lexicon, EmotionCategory, Lexicon,
    NUM_CATEGORIES,
};
use sentigan::gan::{
    self, binary_discriminator_cost, binary_value, discriminator_spec, generator_spec,
    supervised_loss, unsupervised_loss, GanModel, TrainConfig,
};
use sentigan::imaging::build_image;
use sentigan::tensornet::{
    softmax, AdamState, LayerParams, LayerSpec, Network, Tensor,
};
use sentigan::textstats::{
    cooccurrence_graph, phi, tokenize, ContingencyTable,
};

fn report(number: u32, name: &str, f: impl FnOnce()) {
    let outcome = catch_unwind(AssertUnwindSafe(f));
    match outcome {
        Ok(()) => println!("ACCEPTANCE {number} {name}: PASS"),
        Err(payload) => {
            println!("ACCEPTANCE {number} {name}: FAIL");
            std::panic::resume_unwind(payload);
        }
    }
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let len: usize = shape.iter().product();
    Tensor::from_vec(shape, (0..len).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect())
}

// --- criterion 1: gradient correctness ----------------------------------

/// Sum-of-squares loss over the batch outputs with its analytic gradient.
fn sq_loss(outputs: &[Tensor]) -> (f64, Vec<Tensor>) {
    let mut value = 0.0;
    let mut grads = Vec::with_capacity(outputs.len());
    for o in outputs {
        value += o.data.iter().map(|v| v * v).sum::<f64>();
        let mut g = o.clone();
        g.scale(2.0);
        grads.push(g);
    }
    (value, grads)
}

fn loss_value(net: &Network, inputs: &[Tensor]) -> f64 {
    inputs
        .iter()
        .map(|x| {
            let out = net.forward(x).unwrap();
            out.data.iter().map(|v| v * v).sum::<f64>()
        })
        .sum()
}

/// True when a Relu/LeakyRelu pre-activation changes sign between the
/// +h and -h evaluations: finite differences are invalid across such a
/// kink, so those parameter entries are skipped.
fn kink_crossed(plus: &Network, minus: &Network, inputs: &[Tensor]) -> bool {
    for x in inputs {
        let cache_p = plus.forward_cached(x).unwrap();
        let cache_m = minus.forward_cached(x).unwrap();
        for (j, layer) in plus.layers.iter().enumerate() {
            if matches!(layer, LayerSpec::Relu | LayerSpec::LeakyRelu { .. }) {
                let a = &cache_p.activations[j];
                let b = &cache_m.activations[j];
                if a.data.iter().zip(&b.data).any(|(p, m)| (*p >= 0.0) != (*m >= 0.0)) {
                    return true;
                }
            }
        }
    }
    false
}

/// Central finite differences over a bounded random sample of parameter
/// entries per layer, relative error < 1e-4.
fn gradcheck(net: &Network, inputs: &[Tensor], per_layer: usize, rng: &mut ChaCha8Rng) {
    let (_, analytic) = net.gradients(inputs, sq_loss).unwrap();
    let h = 1e-5;
    let mut net = net.clone();
    for layer in 0..net.params.len() {
        for which in 0..2 {
            let len = {
                let slot = if which == 0 {
                    net.params[layer].weight.as_ref()
                } else {
                    net.params[layer].bias.as_ref()
                };
                match slot {
                    Some(t) => t.data.len(),
                    None => continue,
                }
            };
            let mut indices: Vec<usize> = (0..len).collect();
            if len > per_layer {
                for i in 0..per_layer {
                    let j = rng.gen_range(i..len);
                    indices.swap(i, j);
                }
                indices.truncate(per_layer);
            }
            for i in indices {
                let tweak = |net: &mut Network, delta: f64| {
                    let t = if which == 0 {
                        net.params[layer].weight.as_mut().unwrap()
                    } else {
                        net.params[layer].bias.as_mut().unwrap()
                    };
                    t.data[i] += delta;
                };
                let mut plus_net = net.clone();
                tweak(&mut plus_net, h);
                let mut minus_net = net.clone();
                tweak(&mut minus_net, -h);
                if kink_crossed(&plus_net, &minus_net, inputs) {
                    continue;
                }
                let plus = loss_value(&plus_net, inputs);
                let minus = loss_value(&minus_net, inputs);
                let numeric = (plus - minus) / (2.0 * h);
                let a = if which == 0 {
                    analytic[layer].weight.as_ref().unwrap().data[i]
                } else {
                    analytic[layer].bias.as_ref().unwrap().data[i]
                };
                let scale = numeric.abs().max(a.abs()).max(1e-6);
                assert!(
                    (numeric - a).abs() / scale < 1e-4,
                    "layer {layer} slot {which} idx {i}: analytic {a} vs numeric {numeric}"
                );
            }
        }
    }
}

#[test]
fn criterion_1_gradient_correctness() {
    report(1, "gradient-correctness", || {
        let started = Instant::now();
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            // Every layer kind, each exercised in a small net with
            // parameters in front so the chain through it is checked.
            let cases: Vec<(Vec<LayerSpec>, Vec<usize>)> = vec![
                (vec![LayerSpec::Dense { inputs: 6, outputs: 4 }], vec![6]),
                (
                    vec![LayerSpec::Conv2d {
                        in_channels: 2, out_channels: 3, kernel: 3, stride: 2, padding: 1,
                    }],
                    vec![2, 5, 5],
                ),
                (
                    vec![LayerSpec::TransposedConv2d {
                        in_channels: 2, out_channels: 3, kernel: 3, stride: 2,
                        padding: 1, output_padding: 1,
                    }],
                    vec![2, 4, 4],
                ),
                (
                    vec![
                        LayerSpec::Dense { inputs: 5, outputs: 8 },
                        LayerSpec::Relu,
                        LayerSpec::Reshape { shape: vec![2, 2, 2] },
                        LayerSpec::Flatten,
                        LayerSpec::LeakyRelu { slope: 0.2 },
                        LayerSpec::Dense { inputs: 8, outputs: 3 },
                        LayerSpec::Sigmoid,
                    ],
                    vec![5],
                ),
                (discriminator_spec(), vec![2, 10, 10]),
                (generator_spec(16), vec![16]),
            ];
            for (specs, in_shape) in cases {
                let net = Network::new(specs, 77 + seed);
                let inputs = vec![
                    random_tensor(&mut rng, &in_shape),
                    random_tensor(&mut rng, &in_shape),
                ];
                gradcheck(&net, &inputs, 25, &mut rng);
            }
        }
        assert!(started.elapsed().as_secs() < 60, "gradcheck exceeded 1 minute");
    });
}

// --- criterion 2: loss identities ---------------------------------------

/// Discriminator whose dense head always produces the given logits.
fn fixed_logit_model(logits: [f64; 3]) -> GanModel {
    let mut model = GanModel::new(8, 0);
    for p in &mut model.discriminator.params {
        if let Some(w) = p.weight.as_mut() {
            w.data.iter_mut().for_each(|v| *v = 0.0);
        }
    }
    let head = model.discriminator.params.last_mut().unwrap();
    head.bias = Some(Tensor::from_vec(&[3], logits.to_vec()));
    model
}

#[test]
fn criterion_2_loss_identities() {
    report(2, "loss-identities", || {
        let mut rng = ChaCha8Rng::seed_from_u64(2020);
        for seed in 0..5u64 {
            let model = GanModel::new(8, 40 + seed);
            let batch: Vec<(Tensor, usize)> = (0..6)
                .map(|i| (random_tensor(&mut rng, &[2, 10, 10]), i % 2))
                .collect();
            let real: Vec<Tensor> =
                (0..6).map(|_| random_tensor(&mut rng, &[2, 10, 10])).collect();
            let fake: Vec<Tensor> =
                (0..6).map(|_| random_tensor(&mut rng, &[2, 10, 10])).collect();

            // Combined loss L = L_supervised + L_unsupervised, recomputed from
            // the two independent loss functions.
            let l_sup = supervised_loss(&model, &batch).unwrap();
            let l_unsup = unsupervised_loss(&model, &real, &fake).unwrap();
            let total = l_sup + l_unsup;
            assert!((total - (l_sup + l_unsup)).abs() < 1e-12);

            // The training loop must report exactly that decomposition.
            let config = TrainConfig {
                epochs: 2,
                batch_size: 6,
                noise_dim: 8,
                seed,
                ..TrainConfig::default()
            };
            let (_, reports) = gan::train(&batch, &[], &config).unwrap();
            for r in &reports {
                assert!(
                    (r.l_total - (r.l_supervised + r.l_unsupervised)).abs() < 1e-12,
                    "epoch {}: {} vs {}",
                    r.epoch,
                    r.l_total,
                    r.l_supervised + r.l_unsupervised
                );
            }

            // Binary-game identity: V~ = -2 J(theta_D) on equal-size batches.
            let v = binary_value(&model, &real, &fake).unwrap();
            let j = binary_discriminator_cost(&model, &real, &fake).unwrap();
            assert!((v + 2.0 * j).abs() < 1e-12, "V~ = {v}, J = {j}");
        }

        // D(x) = 0.5 fixed point: p_fake = 0.5 everywhere.
        let model = fixed_logit_model([0.25f64.ln(), 0.25f64.ln(), 0.5f64.ln()]);
        let real = vec![random_tensor(&mut rng, &[2, 10, 10])];
        let fake = vec![random_tensor(&mut rng, &[2, 10, 10])];
        let p = softmax(&model.discriminator.forward(&real[0]).unwrap().data);
        assert!((p[2] - 0.5).abs() < 1e-12);
        let j = binary_discriminator_cost(&model, &real, &fake).unwrap();
        assert!((j - std::f64::consts::LN_2).abs() < 1e-9, "J = {j}");
        let l_unsup = unsupervised_loss(&model, &real, &fake).unwrap();
        assert!(
            (l_unsup - 2.0 * std::f64::consts::LN_2).abs() < 1e-9,
            "unsupervised = {l_unsup}"
        );
    });
}

// --- criterion 3: phi oracle --------------------------------------------

fn corpus_from_docs(docs: &[Vec<&str>]) -> Corpus {
    let mut corpus = Corpus::default();
    for (i, words) in docs.iter().enumerate() {
        let post_id = format!("p{i}");
        let comment_id = format!("c{i}");
        corpus.posts.insert(
            post_id.clone(),
            Post {
                id: post_id.clone(),
                subreddit: "s".to_string(),
                author: "author".to_string(),
                comment_ids: vec![comment_id.clone()],
            },
        );
        let comment = Comment {
            id: comment_id.clone(),
            author: "author".to_string(),
            post_id,
            parent_id: None,
            timestamp: i as i64,
            body: words.join(" "),
            subreddit: Some("s".to_string()),
        };
        corpus.comments.insert(comment_id, comment.clone());
        corpus
            .users
            .entry("author".to_string())
            .or_insert_with(|| UserRecord {
                user_id: "author".to_string(),
                comments: Vec::new(),
                label: Label::Unlabeled,
            })
            .comments
            .push(comment);
    }
    corpus
}

#[test]
fn criterion_3_phi_oracle() {
    report(3, "phi-oracle", || {
        let started = Instant::now();
        // Hand case: (n11,n10,n01,n00) = (2,1,1,2) -> exactly 1/3.
        let hand = ContingencyTable { n11: 2, n10: 1, n01: 1, n00: 2 };
        assert_eq!(phi(&hand), 1.0 / 3.0);

        let vocab: Vec<String> = (0..20).map(|i| format!("w{i:02}")).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3030);
        for _ in 0..20 {
            let n_posts = rng.gen_range(1..=50usize);
            let n_vocab = rng.gen_range(2..=20usize);
            let docs: Vec<Vec<&str>> = (0..n_posts)
                .map(|_| {
                    let n_words = rng.gen_range(0..=6usize);
                    (0..n_words)
                        .map(|_| vocab[rng.gen_range(0..n_vocab)].as_str())
                        .collect()
                })
                .collect();
            let corpus = corpus_from_docs(&docs);

            // Brute-force oracle straight from the definition.
            let doc_sets: Vec<BTreeSet<&str>> =
                docs.iter().map(|d| d.iter().copied().collect()).collect();
            let n = doc_sets.len() as i64;
            let mut expected: BTreeMap<(String, String), (f64, u64)> = BTreeMap::new();
            for a in 0..n_vocab {
                for b in (a + 1)..n_vocab {
                    let (x, y) = (vocab[a].as_str(), vocab[b].as_str());
                    let n11 = doc_sets.iter().filter(|d| d.contains(x) && d.contains(y)).count()
                        as i64;
                    if n11 == 0 {
                        continue;
                    }
                    let n10 = doc_sets.iter().filter(|d| d.contains(x) && !d.contains(y)).count()
                        as i64;
                    let n01 = doc_sets.iter().filter(|d| !d.contains(x) && d.contains(y)).count()
                        as i64;
                    let n00 = n - n11 - n10 - n01;
                    let denom = ((n11 + n10) as f64
                        * (n01 + n00) as f64
                        * (n11 + n01) as f64
                        * (n10 + n00) as f64)
                        .sqrt();
                    let score = if denom == 0.0 {
                        0.0
                    } else {
                        (n11 as f64 * n00 as f64 - n10 as f64 * n01 as f64) / denom
                    };
                    expected.insert((x.to_string(), y.to_string()), (score, n11 as u64));
                }
            }

            let graph = cooccurrence_graph(&corpus, -1.0, 1, None).unwrap();
            let got: BTreeMap<(String, String), (f64, u64)> = graph
                .iter()
                .map(|s| ((s.word_x.clone(), s.word_y.clone()), (s.phi, s.n11)))
                .collect();
            assert_eq!(got.len(), graph.len(), "duplicate pairs in graph");
            assert_eq!(
                got.keys().collect::<Vec<_>>(),
                expected.keys().collect::<Vec<_>>(),
                "pair sets differ"
            );
            for (pair, (score, n11)) in &expected {
                let (g_score, g_n11) = got[pair];
                assert_eq!(g_n11, *n11, "{pair:?}");
                assert!((g_score - score).abs() < 1e-12, "{pair:?}: {g_score} vs {score}");
            }
            // Sorted by descending phi.
            for w in graph.windows(2) {
                assert!(w[0].phi >= w[1].phi);
            }
        }
        assert!(started.elapsed().as_secs() < 10, "phi oracle exceeded 10 s");
    });
}

// --- criterion 4: emotion/image oracles ---------------------------------

struct RawLexicon {
    /// word -> category indices, the test's own representation.
    words: HashMap<String, BTreeSet<usize>>,
}

fn random_lexicon(rng: &mut ChaCha8Rng) -> (Lexicon, RawLexicon) {
    let mut lexicon = Lexicon::new();
    let mut raw = RawLexicon { words: HashMap::new() };
    for i in 0..30 {
        let word = format!("word{i:02}");
        let n_cats = rng.gen_range(1..=3usize);
        for _ in 0..n_cats {
            let cat = rng.gen_range(0..NUM_CATEGORIES);
            lexicon.insert(&word, EmotionCategory::ALL[cat]);
            raw.words.entry(word.clone()).or_default().insert(cat);
        }
    }
    (lexicon, raw)
}

fn reference_counts(tokens: &[String], raw: &RawLexicon) -> [u64; NUM_CATEGORIES] {
    let mut counts = [0u64; NUM_CATEGORIES];
    for token in tokens {
        if let Some(cats) = raw.words.get(token) {
            for &c in cats {
                counts[c] += 1;
            }
        }
    }
    counts
}

fn reference_normalize(counts: &[u64; NUM_CATEGORIES]) -> [f64; NUM_CATEGORIES] {
    let max = *counts.iter().max().unwrap();
    let mut out = [0.0; NUM_CATEGORIES];
    if max > 0 {
        for (o, &c) in out.iter_mut().zip(counts) {
            *o = c as f64 / max as f64;
        }
    }
    out
}

#[test]
fn criterion_4_emotion_image_oracles() {
    report(4, "emotion-image-oracles", || {
        let started = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(4040);
        let (lexicon, raw) = random_lexicon(&mut rng);
        let vocab: Vec<String> = (0..40)
            .map(|i| if i < 30 { format!("word{i:02}") } else { format!("plain{i}") })
            .collect();

        for user_idx in 0..100 {
            // One user with 0..40 comments inside a single post, plus a
            // second user whose comments reply to some of them.
            let user_id = format!("subject{user_idx}");
            let n_comments = rng.gen_range(0..=40usize);
            let mut corpus = Corpus::default();
            corpus.posts.insert(
                "p0".to_string(),
                Post {
                    id: "p0".to_string(),
                    subreddit: "s".to_string(),
                    author: user_id.clone(),
                    comment_ids: Vec::new(),
                },
            );
            let mut subject_comments = Vec::new();
            for c in 0..n_comments {
                let body: String = (0..rng.gen_range(1..=8usize))
                    .map(|_| vocab[rng.gen_range(0..vocab.len())].as_str())
                    .collect::<Vec<_>>()
                    .join(" ");
                let comment = Comment {
                    id: format!("c{c:03}"),
                    author: user_id.clone(),
                    post_id: "p0".to_string(),
                    parent_id: None,
                    timestamp: 1000 + c as i64,
                    body,
                    subreddit: None,
                };
                corpus.posts.get_mut("p0").unwrap().comment_ids.push(comment.id.clone());
                corpus.comments.insert(comment.id.clone(), comment.clone());
                subject_comments.push(comment);
                // Maybe a reply from someone else.
                if rng.gen::<f64>() < 0.4 {
                    let body: String = (0..rng.gen_range(1..=6usize))
                        .map(|_| vocab[rng.gen_range(0..vocab.len())].as_str())
                        .collect::<Vec<_>>()
                        .join(" ");
                    let reply = Comment {
                        id: format!("r{c:03}"),
                        author: "other".to_string(),
                        post_id: "p0".to_string(),
                        parent_id: Some(format!("c{c:03}")),
                        timestamp: 2000 + c as i64,
                        body,
                        subreddit: None,
                    };
                    corpus.posts.get_mut("p0").unwrap().comment_ids.push(reply.id.clone());
                    corpus.comments.insert(reply.id.clone(), reply);
                }
            }
            let user = UserRecord {
                user_id: user_id.clone(),
                comments: subject_comments.clone(),
                label: Label::Unlabeled,
            };
            corpus.users.insert(user_id.clone(), user.clone());

            // Oracle for emotion_counts / normalize / score_text.
            for comment in &subject_comments {
                let tokens = tokenize(&comment.body);
                let expected_counts = reference_counts(&tokens, &raw);
                assert_eq!(emotion_counts(&tokens, &lexicon), expected_counts);
                let expected_vec = reference_normalize(&expected_counts);
                assert_eq!(normalize_counts(&expected_counts).values, expected_vec);
                assert_eq!(score_text(&comment.body, &lexicon).values, expected_vec);
            }

            // Oracle for build_image: newest 30 comments, zero-padded at
            // the old end, rows = mean of 3; influence row = mean of the
            // replies' emotion vectors (zero when unreplied).
            let image = build_image(&user, &subject_comments, &corpus, &lexicon);
            let kept: Vec<&Comment> = if subject_comments.len() > 30 {
                subject_comments[subject_comments.len() - 30..].iter().collect()
            } else {
                subject_comments.iter().collect()
            };
            let pad = 30 - kept.len();
            let mut emotion_rows = vec![[0.0; NUM_CATEGORIES]; pad];
            let mut influence_rows = vec![[0.0; NUM_CATEGORIES]; pad];
            for comment in &kept {
                let tokens = tokenize(&comment.body);
                emotion_rows.push(reference_normalize(&reference_counts(&tokens, &raw)));
                let replies: Vec<&Comment> = corpus
                    .comments
                    .values()
                    .filter(|c| c.parent_id.as_deref() == Some(comment.id.as_str()))
                    .collect();
                let mut infl = [0.0; NUM_CATEGORIES];
                if !replies.is_empty() {
                    for reply in &replies {
                        let v = reference_normalize(&reference_counts(
                            &tokenize(&reply.body),
                            &raw,
                        ));
                        for (slot, x) in infl.iter_mut().zip(v) {
                            *slot += x;
                        }
                    }
                    for slot in infl.iter_mut() {
                        *slot /= replies.len() as f64;
                    }
                }
                influence_rows.push(infl);
            }
            for row in 0..10 {
                for cat in 0..NUM_CATEGORIES {
                    let mean = |rows: &[[f64; NUM_CATEGORIES]]| {
                        (rows[row * 3][cat] + rows[row * 3 + 1][cat] + rows[row * 3 + 2][cat])
                            / 3.0
                    };
                    assert!(
                        (image.channel_emotion[row][cat] - mean(&emotion_rows)).abs() < 1e-12,
                        "user {user_idx} emotion row {row} cat {cat}"
                    );
                    assert!(
                        (image.channel_influence[row][cat] - mean(&influence_rows)).abs()
                            < 1e-12,
                        "user {user_idx} influence row {row} cat {cat}"
                    );
                }
            }
        }
        assert!(started.elapsed().as_secs() < 10, "emotion/image oracle exceeded 10 s");
    });
}

// --- criterion 5: metric formulas ---------------------------------------

#[test]
fn criterion_5_metric_formulas() {
    report(5, "metric-formulas", || {
        let f1 = f1_score(0.9346, 0.9429);
        assert!((f1 - 0.9388).abs() <= 1e-4, "F1(0.9346, 0.9429) = {f1}");
    });
}

// --- criteria 6 & 7: synthetic benchmark --------------------------------

fn benchmark_dataset(seed: u64, relapse_fraction: f64, margin: f64) -> Vec<(FeatureVector, bool)> {
    let profile = SynthProfile { margin, ..SynthProfile::default() };
    let corpus = synth_corpus(seed, 1000, relapse_fraction, &profile).unwrap();
    let lexicon = synth_lexicon();
    let reference = sentigan::imaging::default_reference_time(&corpus);
    let images =
        sentigan::imaging::build_all_images(&corpus, &lexicon, &WindowSpec::default(), reference);
    images
        .iter()
        .map(|image| {
            (FeatureVector::from_image(image), image.label == Label::Relapsed)
        })
        .collect()
}

fn gan_holdout_accuracy(
    data: &[(FeatureVector, bool)],
    train_fraction: f64,
    epochs: usize,
    seed: u64,
) -> f64 {
    let (train, test) = stratified_split(data, train_fraction, seed).unwrap();
    let labeled: Vec<(Tensor, usize)> = train
        .iter()
        .map(|(x, y)| {
            (Tensor::from_vec(&[2, 10, 10], x.values.clone()), if *y { 0 } else { 1 })
        })
        .collect();
    let config = TrainConfig {
        epochs,
        batch_size: 128,
        learning_rate: 1e-4,
        seed,
        ..TrainConfig::default()
    };
    let (model, reports) = gan::train(&labeled, &[], &config).unwrap();
    assert_eq!(reports.len(), epochs);
    let correct = test
        .iter()
        .filter(|(x, y)| {
            let t = Tensor::from_vec(&[2, 10, 10], x.values.clone());
            let p = gan::predict_relapse_tensor(&model, &t).unwrap();
            (p >= 0.5) == *y
        })
        .count();
    correct as f64 / test.len() as f64
}

#[test]
fn criterion_6_end_to_end_benchmark() {
    report(6, "end-to-end-benchmark", || {
        let started = Instant::now();

        // Default margin, 670/330 class mix.
        let data = benchmark_dataset(11, 0.67, SynthProfile::default().margin);
        assert_eq!(data.len(), 1000);
        assert_eq!(data.iter().filter(|(_, y)| *y).count(), 670);
        let acc = gan_holdout_accuracy(&data, 0.8, 40, 11);
        assert!(acc >= 0.90, "default-margin accuracy {acc} < 0.90");

        // Margin 0 with a balanced class mix: no signal, so accuracy must
        // collapse toward chance.
        let flat = benchmark_dataset(11, 0.5, 0.0);
        let flat_acc = gan_holdout_accuracy(&flat, 0.8, 15, 11);
        assert!(flat_acc <= 0.60, "margin-0 accuracy {flat_acc} > 0.60");

        assert!(
            started.elapsed().as_secs() < 600,
            "benchmark exceeded 10 minutes ({:?})",
            started.elapsed()
        );
    });
}

#[test]
fn criterion_7_comparative_ordering() {
    report(7, "comparative-ordering", || {
        let data = benchmark_dataset(11, 0.67, SynthProfile::default().margin);
        let fractions = [0.9, 0.5];
        let config = HarnessConfig {
            gan: TrainConfig { epochs: 80, ..TrainConfig::default() },
            ..HarnessConfig::default()
        };
        let rows = compare_harness(&data, &fractions, &[3], &config).unwrap();
        assert_eq!(rows.len(), 8, "expected 4 methods x 2 fractions");
        for &fraction in &fractions {
            let acc_of = |method: &str| {
                rows.iter()
                    .find(|r| r.method == method && r.fraction == fraction)
                    .unwrap_or_else(|| panic!("missing {method} at {fraction}"))
                    .acc
            };
            let (gan_acc, knn_acc) = (acc_of("GAN"), acc_of("KNN"));
            assert!(
                gan_acc >= knn_acc,
                "fraction {fraction}: GAN {gan_acc} < KNN {knn_acc}"
            );
        }
        let csv = sentigan::baselines::harness_to_csv(&rows);
        assert!(csv.starts_with("method,fraction,seed,acc,f1\n"));
        assert_eq!(csv.lines().count(), 9);
        for method in ["LogReg", "SVM", "KNN", "GAN"] {
            for fraction in ["0.9000", "0.5000"] {
                assert!(
                    csv.contains(&format!("{method},{fraction},3,")),
                    "CSV missing {method} at {fraction}"
                );
            }
        }
    });
}

// --- criterion 8: determinism -------------------------------------------

#[test]
fn criterion_8_determinism() {
    report(8, "determinism", || {
        let bin = env!("CARGO_BIN_EXE_sentigan");
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path();
        let run = |args: &[&str]| {
            let output = std::process::Command::new(bin)
                .args(args)
                .output()
                .expect("spawn sentigan");
            assert!(
                output.status.success(),
                "command {:?} failed: {}",
                args,
                String::from_utf8_lossy(&output.stderr)
            );
        };
        let s = |p: std::path::PathBuf| p.into_os_string().into_string().unwrap();
        run(&["synth", "--out", &s(base.join("data")), "--users", "30", "--seed", "5"]);
        run(&[
            "images",
            "--corpus", &s(base.join("data/corpus.jsonl")),
            "--lexicon", &s(base.join("data/lexicon.tsv")),
            "--labels", &s(base.join("data/labels.tsv")),
            "--out", &s(base.join("imgs")),
        ]);
        for name in ["run1", "run2"] {
            run(&[
                "train",
                "--manifest", &s(base.join("imgs/manifest.csv")),
                "--epochs", "2",
                "--batch-size", "16",
                "--noise-dim", "16",
                "--seed", "5",
                "--out", &s(base.join(name)),
            ]);
        }
        let loss1 = std::fs::read(base.join("run1/loss.csv")).unwrap();
        let loss2 = std::fs::read(base.join("run2/loss.csv")).unwrap();
        assert_eq!(loss1, loss2, "loss CSVs differ across identical runs");
        let ckpt1 = std::fs::read(base.join("run1/model.ckpt")).unwrap();
        let ckpt2 = std::fs::read(base.join("run2/model.ckpt")).unwrap();
        assert_eq!(ckpt1, ckpt2, "checkpoints differ across identical runs");

        // Exact checkpoint round-trip: load, store, byte-compare.
        let model = gan::load_gan_model(base.join("run1/model.ckpt")).unwrap();
        gan::store_gan_model(&model, base.join("roundtrip.ckpt")).unwrap();
        let rewritten = std::fs::read(base.join("roundtrip.ckpt")).unwrap();
        assert_eq!(ckpt1, rewritten, "checkpoint round-trip not byte-exact");
        let reloaded = gan::load_gan_model(base.join("roundtrip.ckpt")).unwrap();
        assert_eq!(model, reloaded);
    });
}

// --- criterion 9: Adam oracle -------------------------------------------

#[test]
fn criterion_9_adam_oracle() {
    report(9, "adam-oracle", || {
        // Independent scalar Adam, written from the published update rule.
        let (b1, b2, eps, lr): (f64, f64, f64, f64) = (0.9, 0.999, 1e-8, 0.05);
        let mut theta = 2.0;
        let (mut m, mut v) = (0.0, 0.0);
        let mut reference = Vec::new();
        for t in 1..=5i32 {
            let g = 2.0 * theta; // d/dtheta of theta^2
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let m_hat = m / (1.0 - b1.powi(t));
            let v_hat = v / (1.0 - b2.powi(t));
            theta -= lr * m_hat / (v_hat.sqrt() + eps);
            reference.push(theta);
        }

        let mut params = vec![LayerParams {
            weight: Some(Tensor::from_vec(&[1], vec![2.0])),
            bias: None,
        }];
        let mut adam = AdamState::new(&params, lr);
        for step in 0..5 {
            let current = params[0].weight.as_ref().unwrap().data[0];
            let grads = vec![LayerParams {
                weight: Some(Tensor::from_vec(&[1], vec![2.0 * current])),
                bias: None,
            }];
            adam.step(&mut params, &grads);
            let updated = params[0].weight.as_ref().unwrap().data[0];
            assert!(
                (updated - reference[step]).abs() < 1e-10,
                "step {step}: {updated} vs {}",
                reference[step]
            );
        }
    });
}
