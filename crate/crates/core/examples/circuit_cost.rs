//! Circuit counts for each construction strategy.

use mfm::simdevice::circuit_cost;
use mfm::CostStrategy;

fn main() {
    println!("{:>3} {:>9} {:>7} {:>6} {:>8} {:>10}", "n", "full", "singles", "pairs", "triples", "split n/2");
    for n in 1..=20 {
        let c = |s| circuit_cost(n, s).unwrap();
        let split = if n > 1 { c(CostStrategy::Split(n / 2)).to_string() } else { "-".into() };
        println!(
            "{n:>3} {:>9} {:>7} {:>6} {:>8} {split:>10}",
            c(CostStrategy::Full),
            c(CostStrategy::Singles),
            c(CostStrategy::Pairs),
            c(CostStrategy::Triples)
        );
    }
    for s in [CostStrategy::Pairs, CostStrategy::Triples] {
        let n = (1..=20).find(|&n| (n..=20).all(|m| circuit_cost(m, s).unwrap() < circuit_cost(m, CostStrategy::Full).unwrap()));
        println!("{s} cheaper than full from n = {}", n.unwrap());
    }
}
