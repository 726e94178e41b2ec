fn main() {
    for id in 1..=14usize {
        let t = std::time::Instant::now();
        let r = monotest::verify::criterion(id, false);
        println!("{:6.1}s {r}", t.elapsed().as_secs_f64());
    }
}
