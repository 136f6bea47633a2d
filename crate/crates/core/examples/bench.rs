//! Build, update and enumeration costs across tree sizes, normalized the
//! way the scaling check reads them.
//!
//! cargo run --release --example bench

use forestq::cli::bench_size;

fn main() {
    println!("{:>8} {:>10} {:>14} {:>14} {:>7}", "n", "build/n", "update/log2n", "delay/log2n", "height");
    for p in 10..=20 {
        let n = 1usize << p;
        let r = bench_size(n, 1, 1000, 1000);
        let lg = (n as f64).log2();
        println!(
            "{:>8} {:>10.1} {:>14.1} {:>14.1} {:>7}",
            n,
            r.build_ns / n as f64,
            r.update_ns / lg,
            r.delay_ns / lg,
            r.height
        );
    }
}
