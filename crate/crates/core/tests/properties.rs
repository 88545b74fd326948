use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vdsynth::cgp::{encode, MutationPolicy};
use vdsynth::genlib::{generate, GoldenSpec};
use vdsynth::netlist::{Gate, GateFunc, Netlist, NetlistBuilder};
use vdsynth::oracle::Oracle;
use vdsynth::verify::{build_miter_with, check_wcae, Budget, MiterStyle, Threshold, Verdict};

/// A random well-formed netlist with `n` inputs, `g` gates and `m` outputs:
/// every gate reads earlier signals only.
fn shaped(n: usize, g: usize, m: usize) -> impl Strategy<Value = Netlist> {
    let gates = (0..g).map(move |i| (0..GateFunc::ALL.len(), 0..(n + i) as u32, 0..(n + i) as u32)).collect::<Vec<_>>();
    let outputs = proptest::collection::vec(0..(n + g) as u32, m);
    (gates, outputs).prop_map(move |(gates, outputs)| {
        let gates = gates.into_iter().map(|(f, a, b)| Gate::new(GateFunc::ALL[f], a, b)).collect();
        Netlist::new("p", n, gates, outputs).unwrap()
    })
}

fn netlist(max_inputs: usize, max_gates: usize) -> impl Strategy<Value = Netlist> {
    (1..=max_inputs, 1..=max_gates, 1usize..=4).prop_flat_map(|(n, g, m)| shaped(n, g, m))
}

/// Two circuits with a common interface.
fn pair() -> impl Strategy<Value = (Netlist, Netlist)> {
    (1usize..=6, 1usize..=5).prop_flat_map(|(n, m)| (shaped(n, 25, m), shaped(n, 25, m)))
}

fn same_function(a: &Netlist, b: &Netlist) -> bool {
    (0..1u128 << a.num_inputs()).all(|x| a.eval_int(x).unwrap() == b.eval_int(x).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_round_trip(c in netlist(6, 30)) {
        let parsed = Netlist::parse(&c.to_text()).unwrap();
        prop_assert_eq!(&parsed, &c);
    }

    #[test]
    fn sweep_and_rebuild_preserve_function(c in netlist(6, 30)) {
        let swept = c.sweep();
        prop_assert!(same_function(&c, &swept));
        prop_assert_eq!(swept.size(), c.size());
        let mut b = NetlistBuilder::new(c.num_inputs());
        let inputs: Vec<u32> = (0..c.num_inputs() as u32).collect();
        let outs = b.instantiate(&c, &inputs);
        let hashed = b.finish("h", outs).unwrap();
        prop_assert!(same_function(&c, &hashed));
        prop_assert!(hashed.size() <= c.size());
    }

    #[test]
    fn batch_simulation_matches_scalar(c in netlist(6, 30), words in proptest::collection::vec(any::<u64>(), 6)) {
        let inputs = &words[..c.num_inputs()];
        let out = c.evaluate_batch(inputs).unwrap();
        for lane in [0u32, 1, 17, 63] {
            let x: Vec<bool> = inputs.iter().map(|w| (w >> lane) & 1 == 1).collect();
            let scalar = c.evaluate(&x).unwrap();
            let batch: Vec<bool> = out.iter().map(|w| (w >> lane) & 1 == 1).collect();
            prop_assert_eq!(scalar, batch);
        }
    }

    #[test]
    fn encode_decode_keeps_function(c in netlist(5, 25), extra in 0usize..10) {
        let c = c.sweep();
        let ch = encode(&c, c.gates().len().max(1) + extra).unwrap();
        let d = ch.decode().unwrap();
        prop_assert!(same_function(&c, &d));
        prop_assert_eq!(ch.active_size(), c.size());
    }

    #[test]
    fn mutants_stay_well_formed(seed in any::<u64>(), max in 1usize..8) {
        let g = generate(&GoldenSpec::multiplier(3)).unwrap();
        let mut ch = encode(&g, g.gates().len()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            ch = ch.mutate(&MutationPolicy::fixed(max), &mut rng);
            let d = ch.decode().unwrap();
            prop_assert_eq!(d.num_inputs(), 6);
            prop_assert_eq!(d.num_outputs(), 6);
            prop_assert_eq!(d.size(), ch.active_size());
        }
    }

    #[test]
    fn miter_styles_agree_with_oracle((golden, c) in pair(), frac in 0u64..=100) {
        let m = c.num_outputs();
        let t = Threshold::new(num_rational::Ratio::new(frac, 100), m).unwrap();
        let exact = Oracle::default().errors(&golden, &c, None).unwrap();
        for style in [MiterStyle::Plain, MiterStyle::CarryChain] {
            let miter = build_miter_with(&golden, &c, &t, style).unwrap();
            for x in 0..1u128 << c.num_inputs() {
                let e = golden.eval_int(x).unwrap().abs_diff(c.eval_int(x).unwrap());
                prop_assert_eq!(miter.netlist().eval_int(x).unwrap() == 1, e > t.abs_bound());
            }
        }
        let (v, _) = check_wcae(&golden, &c, &t, &Budget::unlimited()).unwrap();
        prop_assert_eq!(v == Verdict::WithinBound, exact.max_abs <= t.abs_bound());
    }
}
