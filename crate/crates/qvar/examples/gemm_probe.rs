use ndarray::Array2;

fn main() {
    let n = 50;
    let k = 2000;
    let a = Array2::<f64>::from_elem((n, n), 0.3);
    let b = Array2::<f64>::from_elem((n, k), 0.2);
    // 21 gemms of n*n*k
    let t0 = std::time::Instant::now();
    let mut acc = 0.0;
    for _ in 0..21 {
        let c = a.dot(&b);
        acc += c[[0, 0]];
    }
    let dt = t0.elapsed().as_secs_f64() * 1000.0;
    println!("21 gemms (50x50x2000): {dt:.1} ms ({acc})");

    // tanh on 2 x n*k
    let t0 = std::time::Instant::now();
    let c = b.mapv(f64::tanh);
    let d = c.mapv(f64::tanh);
    let dt = t0.elapsed().as_secs_f64() * 1000.0;
    println!("2 x 100k tanh: {dt:.1} ms ({})", d[[0, 0]]);

    // 45 elementwise products with allocation
    let t0 = std::time::Instant::now();
    let mut acc = 0.0;
    for _ in 0..45 {
        let c = &a.dot(&b) * 1.0; // dummy
        acc += c[[0, 0]];
    }
    let _ = acc;
    let t0b = std::time::Instant::now();
    let mut acc2 = 0.0;
    for _ in 0..45 {
        let c = &b * &b;
        acc2 += c[[0, 0]];
    }
    let dt = t0b.elapsed().as_secs_f64() * 1000.0;
    println!("45 elementwise 100k mults (alloc): {dt:.1} ms ({acc2}) [junk {:?}]", t0.elapsed().as_secs_f64());
}
