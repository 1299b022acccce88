import * as fs from 'fs'
import * as path from 'path'
import * as tf from '@tensorflow/tfjs'
import { encodeImage } from '../src/images'
import { diskSaveHandler } from '../src/model'

/** Small deterministic PRNG so fixtures are identical across runs. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0
  return () => {
    a = (a + 0x6d2b79f5) >>> 0
    let t = a
    t = Math.imul(t ^ (t >>> 15), t | 1)
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61)
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296
  }
}

export const FEATURE_DIM = 6
export const LOGIT_DIM = 3

/** Tiny conv classifier with seeded weights, saved as a checkpoint dir. */
export async function buildFixtureModel(dir: string): Promise<void> {
  const model = tf.sequential()
  model.add(
    tf.layers.conv2d({
      filters: 4,
      kernelSize: 3,
      strides: 2,
      activation: 'relu',
      inputShape: [32, 32, 3],
    }),
  )
  model.add(tf.layers.globalAveragePooling2d({}))
  model.add(tf.layers.dense({ units: FEATURE_DIM, activation: 'relu' }))
  model.add(tf.layers.dense({ units: LOGIT_DIM }))

  const rand = mulberry32(1234)
  const seeded = model.getWeights().map(w => {
    const values = new Float32Array(w.size)
    for (let i = 0; i < values.length; i++) {
      values[i] = rand() - 0.5
    }
    return tf.tensor(values, w.shape)
  })
  model.setWeights(seeded)
  await model.save(diskSaveHandler(dir))
}

/** Class-structured PNG folder with deterministic pixel patterns. */
export function buildImageFolder(
  dir: string,
  perClass: number,
  classNames: string[] = ['cat', 'dog'],
  size = 40,
): string[] {
  const rand = mulberry32(99)
  const written: string[] = []
  for (const name of classNames) {
    const classDir = path.join(dir, name)
    fs.mkdirSync(classDir, { recursive: true })
    for (let i = 0; i < perClass; i++) {
      const rgb = new Uint8Array(size * size * 3)
      for (let j = 0; j < rgb.length; j++) {
        rgb[j] = Math.floor(256 * rand())
      }
      const file = path.join(classDir, `img_${String(i).padStart(3, '0')}.png`)
      encodeImage(file, rgb, size, size)
      written.push(file)
    }
  }
  return written
}
