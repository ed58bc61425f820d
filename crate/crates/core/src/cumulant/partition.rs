/// All set partitions of `{0, .., n-1}` whose blocks have at most `max_block`
/// elements.
///
/// Blocks are listed in order of their smallest element and each block is
/// sorted ascending. Generated by restricted-growth strings.
pub fn set_partitions(n: usize, max_block: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    extend(0, n, max_block, &mut blocks, &mut out);
    out
}

fn extend(next: usize, n: usize, max_block: usize, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
    if next == n {
        out.push(blocks.clone());
        return;
    }
    for b in 0..blocks.len() {
        if blocks[b].len() < max_block {
            blocks[b].push(next);
            extend(next + 1, n, max_block, blocks, out);
            blocks[b].pop();
        }
    }
    if max_block > 0 {
        blocks.push(vec![next]);
        extend(next + 1, n, max_block, blocks, out);
        blocks.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_involution_numbers() {
        let counts: Vec<usize> = (1..=8).map(|n| set_partitions(n, 2).len()).collect();
        assert_eq!(counts, vec![1, 2, 4, 10, 26, 76, 232, 764]);
    }

    #[test]
    fn unrestricted_counts_are_bell_numbers() {
        let counts: Vec<usize> = (1..=7).map(|n| set_partitions(n, n).len()).collect();
        assert_eq!(counts, vec![1, 2, 5, 15, 52, 203, 877]);
    }

    #[test]
    fn blocks_up_to_three() {
        // n = 4: 15 Bell partitions minus the single 4-block
        assert_eq!(set_partitions(4, 3).len(), 14);
        assert_eq!(set_partitions(3, 1), vec![vec![vec![0], vec![1], vec![2]]]);
    }

    #[test]
    fn partitions_cover_each_element_once() {
        for p in set_partitions(6, 3) {
            let mut all: Vec<usize> = p.iter().flatten().copied().collect();
            all.sort();
            assert_eq!(all, (0..6).collect::<Vec<_>>());
            assert!(p.iter().all(|b| b.len() <= 3 && b.windows(2).all(|w| w[0] < w[1])));
        }
    }
}
