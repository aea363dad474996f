// Typed client for the /v1 survey API with retry on transient failures.

import type {
  ProductDto,
  ReportDto,
  SubmitBodyDto,
  SubmitResultDto,
  SurveyDto,
} from './types.js'

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

export interface ClientOptions {
  retries?: number
  backoffMs?: number
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message)
    this.name = 'ApiError'
  }

  // 4xx means the request itself is wrong; retrying cannot help.
  get retryable(): boolean {
    return this.status >= 500
  }
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms))

async function errorMessage(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { error?: string }
    return body.error ?? `HTTP ${response.status}`
  } catch {
    return `HTTP ${response.status}`
  }
}

export class ApiClient {
  private readonly retries: number
  private readonly backoffMs: number

  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
    options: ClientOptions = {},
  ) {
    this.retries = options.retries ?? 2
    this.backoffMs = options.backoffMs ?? 250
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let attempt = 0
    for (;;) {
      let response: Response | null = null
      let networkError: unknown = null
      try {
        response = await this.fetchFn(this.baseUrl + path, init)
      } catch (error) {
        networkError = error
      }
      if (response) {
        if (response.ok) {
          return (await response.json()) as T
        }
        const error = new ApiError(response.status, await errorMessage(response))
        if (!error.retryable || attempt >= this.retries) throw error
      } else if (attempt >= this.retries) {
        throw networkError
      }
      await sleep(this.backoffMs * 2 ** attempt)
      attempt += 1
    }
  }

  getSurvey(surveyId: string): Promise<SurveyDto> {
    return this.request(`/v1/survey/${encodeURIComponent(surveyId)}`)
  }

  getProduct(ean: string): Promise<ProductDto> {
    return this.request(`/v1/products/${encodeURIComponent(ean)}`)
  }

  submitResponses(surveyId: string, body: SubmitBodyDto): Promise<SubmitResultDto> {
    return this.request(`/v1/survey/${encodeURIComponent(surveyId)}/responses`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    })
  }

  getReport(surveyId: string): Promise<ReportDto> {
    return this.request(`/v1/reports/${encodeURIComponent(surveyId)}`)
  }
}

// Anonymous per-session respondent token; doubles as the idempotency key
// the server deduplicates on.
export function getOrCreateRespondent(storage: Pick<Storage, 'getItem' | 'setItem'>): string {
  const key = 'groceryrec-respondent'
  const existing = storage.getItem(key)
  if (existing) return existing
  const token = `resp-${Math.random().toString(36).slice(2, 10)}-${Date.now().toString(36)}`
  storage.setItem(key, token)
  return token
}
