//! Synthetic signers, the pose file format, trimming and resolution
//! quantization.
//!
//! cargo run --example posedata

use signdict::pose::synth::{synthesize_sample, template_metadata};
use signdict::pose::{parse_pose_str, quantize_resolution, trim, write_pose_string};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // class 5, sample 0 of seed 1: 90 frames at 30 fps
    let seq = synthesize_sample(5, 0, 90, 0.02, 1)?;
    println!("class 5 metadata: {:?}", template_metadata(5));
    println!("{} frames, {:.1} s at {} fps, {:?}", seq.len(), seq.duration_s(), seq.fps(), seq.source_resolution());

    let text = write_pose_string(&seq);
    println!("pose file: {} bytes, header `{}`", text.len(), text.lines().next().unwrap());
    let back = parse_pose_str(&text)?;
    assert_eq!(back.len(), seq.len());

    let cut = trim(&seq, 1.0, 2.0)?;
    println!("trimmed to [1.0, 2.0] s: {} frames", cut.len());

    for ratio in [1.0, 0.3, 0.1] {
        let q = quantize_resolution(&seq, ratio)?;
        let wrist = q.frames()[0].landmarks()[16];
        println!("ratio {ratio:>3}: grid {:?}, right wrist at ({:.4}, {:.4})", q.source_resolution(), wrist.x, wrist.y);
    }
    Ok(())
}
